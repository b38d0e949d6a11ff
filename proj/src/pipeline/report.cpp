#include <fmt/format.h>

#include <sstream>

#include "tutorbench/jsonl.hpp"
#include "tutorbench/pipeline.hpp"

namespace tutorbench {

namespace fs = std::filesystem;

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(double v) { return fmt::format("{}", v); }

const AdaptivityCell* find_cell(const ReportBundle& r, std::string_view model, ContextComponent c) {
  for (const auto& cell : r.adaptivity) {
    if (cell.model_name == model && cell.component == c) return &cell;
  }
  return nullptr;
}

const ModelQuality* find_quality(const ReportBundle& r, std::string_view model) {
  for (const auto& q : r.quality) {
    if (q.model_name == model) return &q;
  }
  return nullptr;
}

double report_confidence(const ReportBundle& r) {
  for (const auto& q : r.quality) {
    for (const auto& row : q.rows) {
      if (row.estimate) return row.estimate->confidence;
    }
  }
  return 0.95;
}

}  // namespace

std::string format_p_value(double p) {
  auto s = fmt::format("{:.3f}", p);
  if (s.starts_with("0.")) s.erase(0, 1);
  return s;
}

std::string format_adaptivity_cell(std::optional<double> d, double p) {
  std::string effect = "n/a";
  if (d) {
    effect = fmt::format("{:.2f}", *d);
    if (effect == "-0.00") effect = "0.00";
  }
  return fmt::format("{}, {}{}", effect, format_p_value(p), p < kSignificanceAlpha ? "*" : "");
}

std::string format_proportion(const std::optional<ProportionEstimate>& e) {
  if (!e) return "n/a";
  return fmt::format("{:.2f}% ± {:.2f}%", 100.0 * e->midpoint, 100.0 * e->margin);
}

std::string render_markdown(const ReportBundle& r) {
  std::ostringstream out;
  out << "# Context adaptivity report\n\n";
  out << "Run `" << r.run_id << "`\n\n";

  out << "## Adaptivity (effect size d, p)\n\n| Model | n |";
  for (auto c : kReportComponentOrder) out << ' ' << display_name(c) << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < kReportComponentOrder.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& m : r.models) {
    out << "| " << m << " | ";
    const auto* first = find_cell(r, m, kReportComponentOrder[0]);
    out << (first ? std::to_string(first->n) : "0") << " |";
    for (auto c : kReportComponentOrder) {
      const auto* cell = find_cell(r, m, c);
      out << ' '
          << (cell ? format_adaptivity_cell(cell->result.effect_size_d, cell->result.p_value) : "n/a")
          << " |";
    }
    out << '\n';
  }
  out << fmt::format("\n\\* Significant at the α = {} level. Larger effect sizes mean the responses moved "
                     "further when the component was withheld.\n\n",
                     kSignificanceAlpha);

  out << fmt::format("## Response quality (midpoint ± margin, {:.0f}% Wilson interval)\n\n| Metric |",
                     100.0 * report_confidence(r));
  for (const auto& m : r.models) out << ' ' << m << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < r.models.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t k = 0; k < kAllQualityMetrics.size(); ++k) {
    out << "| " << metric_label(kAllQualityMetrics[k]) << " |";
    for (const auto& m : r.models) {
      const auto* q = find_quality(r, m);
      out << ' ' << (q ? format_proportion(q->rows[k].estimate) : "n/a") << " |";
    }
    out << '\n';
  }

  out << "\n## Generations\n\n| Model | Attempted | Succeeded | Failed | Embedded |\n|---|---|---|---|---|\n";
  for (const auto& c : r.counts) {
    out << fmt::format("| {} | {} | {} | {} | {} |\n", c.model_name, c.attempted, c.succeeded, c.failed,
                       c.embedded);
  }

  out << "\n## PCA\n\n";
  if (r.pca_explained_variance_ratio.empty()) {
    out << "Not computed.\n";
  } else {
    out << "Explained variance ratio:";
    for (std::size_t i = 0; i < r.pca_explained_variance_ratio.size(); ++i) {
      out << fmt::format(" PC{} {:.4f}", i + 1, r.pca_explained_variance_ratio[i]);
    }
    out << fmt::format(". Points and ellipses: `{}`, `{}`.\n", r.pca_points_file, kPcaPlotFile);
  }

  out << fmt::format("\n## Failures\n\n{} logged in `{}`.\n", r.failures.size(), kFailuresFile);
  return out.str();
}

json render_json(const ReportBundle& r) {
  json cells = json::array();
  for (const auto& cell : r.adaptivity) {
    auto j = cell_to_json(cell);
    j["rendered"] = format_adaptivity_cell(cell.result.effect_size_d, cell.result.p_value);
    j["significant"] = cell.result.p_value < kSignificanceAlpha;
    cells.push_back(std::move(j));
  }
  json quality = quality_to_json(r.quality);
  std::size_t i = 0;
  for (const auto& q : r.quality) {
    for (const auto& row : q.rows) {
      quality[i]["label"] = metric_label(row.metric);
      quality[i++]["rendered"] = format_proportion(row.estimate);
    }
  }
  json counts = json::array();
  for (const auto& c : r.counts) {
    counts.push_back({{"model", c.model_name},
                      {"attempted", c.attempted},
                      {"succeeded", c.succeeded},
                      {"failed", c.failed},
                      {"embedded", c.embedded}});
  }
  return {{"run_id", r.run_id},
          {"models", r.models},
          {"alpha", kSignificanceAlpha},
          {"adaptivity", cells},
          {"quality", quality},
          {"counts", counts},
          {"pca",
           {{"explained_variance_ratio", r.pca_explained_variance_ratio},
            {"points_file", r.pca_points_file},
            {"plot_file", r.pca_points_file.empty() ? "" : std::string(kPcaPlotFile)}}},
          {"failures", {{"count", r.failures.size()}, {"file", kFailuresFile}}}};
}

std::string render_csv(const ReportBundle& r) {
  std::string out = "table,model,column,n,value,p_value_or_margin,rendered\n";
  for (const auto& m : r.models) {
    for (auto c : kReportComponentOrder) {
      const auto* cell = find_cell(r, m, c);
      if (!cell) continue;
      const auto& res = cell->result;
      out += fmt::format("adaptivity,{},{},{},{},{},{}\n", csv_field(m), csv_field(display_name(c)),
                         cell->n, res.effect_size_d ? csv_number(*res.effect_size_d) : "",
                         csv_number(res.p_value),
                         csv_field(format_adaptivity_cell(res.effect_size_d, res.p_value)));
    }
  }
  for (const auto& m : r.models) {
    const auto* q = find_quality(r, m);
    if (!q) continue;
    for (const auto& row : q->rows) {
      out += fmt::format("quality,{},{},{},{},{},{}\n", csv_field(m), csv_field(metric_label(row.metric)),
                         row.denominator, row.estimate ? csv_number(row.estimate->midpoint) : "",
                         row.estimate ? csv_number(row.estimate->margin) : "",
                         csv_field(format_proportion(row.estimate)));
    }
  }
  return out;
}

ReportBundle load_report_bundle(const fs::path& run_dir) {
  const auto manifest = read_manifest(run_dir);
  for (auto s : {Stage::Test, Stage::Quality}) {
    if (!manifest.is_complete(s)) {
      throw PipelineError(fmt::format("run incomplete: stage '{}' has not finished", stage_name(s)));
    }
  }
  ReportBundle r;
  r.run_id = manifest.run_id;
  for (const auto& m : manifest.config.at("models")) r.models.push_back(m.at("name").get<std::string>());

  const auto grid = json::parse(read_text(run_dir / kAdaptivityFile));
  for (const auto& c : grid.at("cells")) {
    // The per-cell file also carries the bootstrap distribution.
    const auto summary = cell_from_json(c);
    const auto full = run_dir / adaptivity_cell_file_name(summary.model_name, summary.component);
    r.adaptivity.push_back(fs::exists(full) ? cell_from_json(json::parse(read_text(full))) : summary);
  }
  r.quality = quality_from_json(json::parse(read_text(run_dir / kQualityFile)));

  if (manifest.is_complete(Stage::Pca)) {
    const auto plot = json::parse(read_text(run_dir / kPcaPlotFile));
    r.pca_explained_variance_ratio = plot.at("explained_variance_ratio").get<std::vector<double>>();
    r.pca_points_file = std::string(kPcaPointsFile);
  }

  for (const auto& model : r.models) {
    ModelCounts counts;
    counts.model_name = model;
    for (const auto& j : read_jsonl(run_dir / generation_file_name(model))) {
      const auto rec = j.get<GenerationRecord>();
      ++counts.attempted;
      if (rec.ok) {
        ++counts.succeeded;
      } else {
        ++counts.failed;
        r.failures.push_back({"generate", model, rec.scenario_id, rec.variant_key, rec.error});
      }
    }
    for (const auto& j : read_jsonl(run_dir / embedding_file_name(model))) {
      const auto ref = j.get<EmbeddingRef>();
      if (ref.ok) {
        ++counts.embedded;
      } else {
        r.failures.push_back({"embed", model, ref.scenario_id, ref.variant_key, ref.error});
      }
    }
    for (const auto& j : read_jsonl(run_dir / quality_file_name(model))) {
      const auto obs = j.get<QualityObservation>();
      if (!obs.soundness.error.empty()) {
        r.failures.push_back({"quality", model, obs.scenario_id, obs.variant_key, obs.soundness.error});
      }
    }
    r.counts.push_back(counts);
  }
  return r;
}

ReportFormat report_format_from_name(std::string_view name) {
  if (name == "md") return ReportFormat::Markdown;
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw UsageError(fmt::format("unknown report format '{}' (expected md, json or csv)", name));
}

std::string cmd_report(const fs::path& run_dir, ReportFormat format) {
  const auto bundle = load_report_bundle(run_dir);
  const auto md = render_markdown(bundle);
  const auto js = render_json(bundle).dump(2) + "\n";
  const auto csv = render_csv(bundle);
  std::vector<json> failures;
  for (const auto& f : bundle.failures) {
    failures.push_back({{"stage", f.stage},
                        {"model", f.model_name},
                        {"scenario_id", f.scenario_id},
                        {"variant_key", f.variant_key},
                        {"error", f.error}});
  }
  write_text_atomic(run_dir / kReportMarkdown, md);
  write_text_atomic(run_dir / kReportJson, js);
  write_text_atomic(run_dir / kReportCsv, csv);
  write_jsonl_atomic(run_dir / kFailuresFile, failures);
  switch (format) {
    case ReportFormat::Markdown: return md;
    case ReportFormat::Json: return js;
    case ReportFormat::Csv: return csv;
  }
  return md;
}

}  // namespace tutorbench
