#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "tutorbench/analysis.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/jsonl.hpp"

namespace tutorbench {

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void export_plot_data(const std::filesystem::path& dir, const PlotBundle& bundle) {
  if (bundle.points.empty() || bundle.ellipses.empty()) throw Error("nothing to export");

  std::string csv = "scenario_id,variant_key,model,pc1,pc2\n";
  for (const auto& p : bundle.points) {
    csv += fmt::format("{},{},{},{},{}\n", csv_field(p.scenario_id), csv_field(p.variant_key),
                       csv_field(p.model), p.pc1, p.pc2);
  }

  nlohmann::json doc;
  doc["points_file"] = kPcaPointsFile;
  doc["explained_variance_ratio"] = bundle.explained_variance_ratio;
  doc["total_variance"] = bundle.total_variance;
  auto ellipses = nlohmann::json::array();
  for (const auto& e : bundle.ellipses) {
    ellipses.push_back({{"group", e.label},
                        {"n", e.n},
                        {"center", e.center},
                        {"semi_axes", e.axes},
                        {"rotation", e.rotation},
                        {"n_sigma", e.n_sigma},
                        {"degenerate", e.degenerate}});
  }
  doc["ellipses"] = std::move(ellipses);

  try {
    write_text_atomic(dir / kPcaPointsFile, csv);
    write_text_atomic(dir / kPcaPlotFile, doc.dump(2) + "\n");
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(e.what());
  }
}

}  // namespace tutorbench
