#include <fmt/format.h>

#include <unordered_set>

#include "tutorbench/error.hpp"
#include "tutorbench/hashing.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

std::uint64_t derive_cell_seed(std::uint64_t master, std::string_view model_name,
                               ContextComponent c) {
  return master ^ fnv1a64(fmt::format("{}/{}", model_name, variant_key(c)));
}

std::vector<AdaptivityCell> run_adaptivity_tests(const std::vector<ModelEmbeddings>& models, int B,
                                                 std::uint64_t master_seed) {
  if (B < 1) throw StatsError("adaptivity tests need B >= 1");
  std::vector<AdaptivityCell> cells;
  for (const auto& m : models) {
    const auto full_it = m.by_variant.find("full");
    if (full_it == m.by_variant.end()) {
      throw StatsError(fmt::format("model {}: missing variant 'full'", m.model_name));
    }
    std::vector<const EmbeddingMatrix*> mats{&full_it->second};
    for (auto c : kAllComponents) {
      const auto it = m.by_variant.find(std::string(variant_key(c)));
      if (it == m.by_variant.end()) {
        throw StatsError(fmt::format("model {}: missing variant '{}'", m.model_name, variant_key(c)));
      }
      mats.push_back(&it->second);
    }

    // Listwise deletion: keep scenarios present in all six conditions, in
    // the order of the full condition.
    std::vector<std::unordered_set<std::string>> present;
    for (const auto* mat : mats) {
      std::unordered_set<std::string> ids;
      for (const auto& id : mat->row_index) {
        if (!ids.insert(id).second) {
          throw StatsError(fmt::format("{}: duplicate row id '{}'", mat->label, id));
        }
      }
      present.push_back(std::move(ids));
    }
    std::vector<std::string> common;
    for (const auto& id : mats[0]->row_index) {
      bool all = true;
      for (const auto& ids : present) all = all && ids.contains(id);
      if (all) common.push_back(id);
    }
    if (common.empty()) {
      throw StatsError(fmt::format("model {}: no scenario has all six conditions", m.model_name));
    }

    const auto full = mats[0]->subset(common);
    for (std::size_t k = 0; k < kAllComponents.size(); ++k) {
      const auto c = kAllComponents[k];
      const auto ablated = mats[k + 1]->subset(common);
      AdaptivityCell cell;
      cell.model_name = m.model_name;
      cell.component = c;
      cell.n = common.size();
      cell.result = randomization_test(full, ablated, B, derive_cell_seed(master_seed, m.model_name, c));
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

nlohmann::json cell_to_json(const AdaptivityCell& cell, bool with_bootstrap) {
  nlohmann::json j = {{"model", cell.model_name},
                      {"component", placeholder_name(cell.component)},
                      {"variant_key", variant_key(cell.component)},
                      {"n", cell.n},
                      {"statistic", cell.result.statistic},
                      {"p_value", cell.result.p_value},
                      {"effect_size_d", nullptr},
                      {"B", cell.result.B},
                      {"seed", cell.result.seed},
                      {"bootstrap_mean", cell.result.bootstrap_mean()},
                      {"bootstrap_sd", cell.result.bootstrap_sd()}};
  if (cell.result.effect_size_d) j["effect_size_d"] = *cell.result.effect_size_d;
  if (with_bootstrap) j["bootstrap"] = cell.result.bootstrap;
  return j;
}

AdaptivityCell cell_from_json(const nlohmann::json& j) {
  AdaptivityCell cell;
  j.at("model").get_to(cell.model_name);
  const auto comp = component_from_placeholder(j.at("component").get<std::string>());
  if (!comp) throw StatsError("unknown component in result: " + j.at("component").dump());
  cell.component = *comp;
  j.at("n").get_to(cell.n);
  j.at("statistic").get_to(cell.result.statistic);
  j.at("p_value").get_to(cell.result.p_value);
  if (!j.at("effect_size_d").is_null()) cell.result.effect_size_d = j.at("effect_size_d").get<double>();
  j.at("B").get_to(cell.result.B);
  j.at("seed").get_to(cell.result.seed);
  if (j.contains("bootstrap")) j.at("bootstrap").get_to(cell.result.bootstrap);
  return cell;
}

}  // namespace tutorbench
