#include <fmt/format.h>

#include "tutorbench/error.hpp"
#include "tutorbench/quality.hpp"

namespace tutorbench {

std::string_view metric_key(QualityMetric m) {
  switch (m) {
    case QualityMetric::ErrorResponse: return "error_response";
    case QualityMetric::Praise: return "praise";
    case QualityMetric::Intention: return "intention";
    case QualityMetric::Delimiter: return "delimiter";
    case QualityMetric::Count: return "count";
  }
  return "";
}

std::string_view metric_label(QualityMetric m) {
  switch (m) {
    case QualityMetric::ErrorResponse: return "Resp. to error rating";
    case QualityMetric::Praise: return "Praise rating";
    case QualityMetric::Intention: return "Intention inclusion";
    case QualityMetric::Delimiter: return "Delimiter existence";
    case QualityMetric::Count: return "Recomm. count";
  }
  return "";
}

namespace {

nlohmann::json optional_rating(const std::optional<int>& r) {
  return r ? nlohmann::json(*r) : nlohmann::json(nullptr);
}

std::optional<int> rating_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

void to_json(nlohmann::json& j, const QualityObservation& o) {
  j = nlohmann::json{{"model_name", o.model_name},
                     {"scenario_id", o.scenario_id},
                     {"variant_key", o.variant_key},
                     {"intention_pass", o.format.intention_pass},
                     {"delimiter_pass", o.format.delimiter_pass},
                     {"count_pass", o.format.count_pass},
                     {"praise_rating", optional_rating(o.soundness.praise_rating)},
                     {"error_response_rating", optional_rating(o.soundness.error_response_rating)},
                     {"scorer_id", o.soundness.scorer_id},
                     {"scorer_error", o.soundness.error}};
}

void from_json(const nlohmann::json& j, QualityObservation& o) {
  j.at("model_name").get_to(o.model_name);
  j.at("scenario_id").get_to(o.scenario_id);
  j.at("variant_key").get_to(o.variant_key);
  j.at("intention_pass").get_to(o.format.intention_pass);
  j.at("delimiter_pass").get_to(o.format.delimiter_pass);
  j.at("count_pass").get_to(o.format.count_pass);
  o.soundness.praise_rating = rating_from(j.at("praise_rating"));
  o.soundness.error_response_rating = rating_from(j.at("error_response_rating"));
  j.at("scorer_id").get_to(o.soundness.scorer_id);
  j.at("scorer_error").get_to(o.soundness.error);
}

std::vector<ModelQuality> aggregate_quality(const std::vector<std::string>& models,
                                            const std::vector<QualityObservation>& observations,
                                            double confidence) {
  std::vector<ModelQuality> table;
  for (const auto& model : models) {
    ModelQuality mq;
    mq.model_name = model;
    for (std::size_t k = 0; k < kAllQualityMetrics.size(); ++k) mq.rows[k].metric = kAllQualityMetrics[k];
    auto tally = [&](QualityMetric m, bool success) {
      auto& row = mq.rows[static_cast<std::size_t>(m)];
      ++row.denominator;
      if (success) ++row.successes;
    };
    for (const auto& o : observations) {
      if (o.model_name != model) continue;
      tally(QualityMetric::Intention, o.format.intention_pass);
      tally(QualityMetric::Delimiter, o.format.delimiter_pass);
      tally(QualityMetric::Count, o.format.count_pass);
      if (o.soundness.praise_rating) tally(QualityMetric::Praise, *o.soundness.praise_rating == 1);
      if (o.soundness.error_response_rating) {
        tally(QualityMetric::ErrorResponse, *o.soundness.error_response_rating == 1);
      }
    }
    for (auto& row : mq.rows) {
      if (row.denominator > 0) row.estimate = wilson_interval(row.successes, row.denominator, confidence);
    }
    table.push_back(std::move(mq));
  }
  return table;
}

nlohmann::json quality_to_json(const std::vector<ModelQuality>& table) {
  auto out = nlohmann::json::array();
  for (const auto& mq : table) {
    for (const auto& row : mq.rows) {
      nlohmann::json j = {{"model", mq.model_name},
                          {"metric", metric_key(row.metric)},
                          {"successes", row.successes},
                          {"n", row.denominator},
                          {"computable", row.estimate.has_value()},
                          {"midpoint", nullptr},
                          {"margin", nullptr}};
      if (row.estimate) {
        j["midpoint"] = row.estimate->midpoint;
        j["margin"] = row.estimate->margin;
        j["confidence"] = row.estimate->confidence;
      }
      out.push_back(std::move(j));
    }
  }
  return out;
}

std::vector<ModelQuality> quality_from_json(const nlohmann::json& j) {
  std::vector<ModelQuality> table;
  for (const auto& row_json : j) {
    const auto model = row_json.at("model").get<std::string>();
    if (table.empty() || table.back().model_name != model) {
      table.push_back({});
      table.back().model_name = model;
    }
    const auto key = row_json.at("metric").get<std::string>();
    std::optional<QualityMetric> metric;
    for (auto m : kAllQualityMetrics) {
      if (metric_key(m) == key) metric = m;
    }
    if (!metric) throw Error(fmt::format("unknown quality metric '{}'", key));
    auto& row = table.back().rows[static_cast<std::size_t>(*metric)];
    row.metric = *metric;
    row_json.at("successes").get_to(row.successes);
    row_json.at("n").get_to(row.denominator);
    if (row_json.at("computable").get<bool>()) {
      ProportionEstimate e;
      e.successes = row.successes;
      e.n = row.denominator;
      e.confidence = row_json.value("confidence", 0.95);
      row_json.at("midpoint").get_to(e.midpoint);
      row_json.at("margin").get_to(e.margin);
      row.estimate = e;
    }
  }
  return table;
}

}  // namespace tutorbench
