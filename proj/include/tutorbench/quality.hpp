#pragma once

#include <array>
#include <chrono>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tutorbench/backends.hpp"
#include "tutorbench/corpus.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

struct Recommendation {
  std::optional<std::string> intention;  // bracket contents
  std::string body;

  bool operator==(const Recommendation&) const = default;
};

struct ParsedResponse {
  std::string raw_text;
  bool has_delimiter = false;
  std::vector<Recommendation> recommendations;  // empty without a delimiter
};

struct FormatCheckResult {
  bool intention_pass = false;
  bool delimiter_pass = false;
  bool count_pass = false;  // implies delimiter_pass
};

/// Position and contents of the first intention clause: '[' then 1-80
/// characters other than ']' with at least one letter, then ']'.
struct BracketClause {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past ']'
  std::string_view contents;
};
std::optional<BracketClause> find_intention_clause(std::string_view text);

/// Splits on '#', trims, drops empty segments, and lifts the first intention
/// clause of each segment out of its body. Total.
ParsedResponse parse_response(std::string_view text);

/// Joins recommendations with " # ", each as "[intention] body".
std::string serialize_recommendations(const std::vector<Recommendation>& recs);

FormatCheckResult check_format(const ParsedResponse& p);

// ---------------------------------------------------------------------------
// Pedagogical soundness

struct SoundnessScore {
  std::optional<int> praise_rating;
  std::optional<int> error_response_rating;
  std::string scorer_id;
  std::string error;  // set when the scorer failed; ratings stay empty
};

/// External classifier. Request {response_text, scenario}; reply
/// {praise: 0|1|null, error_response: 0|1|null}.
class SoundnessScorer {
 public:
  virtual ~SoundnessScorer() = default;
  virtual std::string id() const = 0;
  /// Throws Error on failure.
  virtual nlohmann::json score(const nlohmann::json& request) = 0;
};

/// Deterministic ratings derived from a hash of the response text, or a fixed
/// value for every request when `constant` is set.
class MockScorer final : public SoundnessScorer {
 public:
  explicit MockScorer(double praise_rate = 0.7, double error_rate = 0.5,
                      std::optional<int> constant = std::nullopt);
  std::string id() const override { return "mock"; }
  nlohmann::json score(const nlohmann::json& request) override;

 private:
  double praise_rate_;
  double error_rate_;
  std::optional<int> constant_;
};

/// Runs `command` through /bin/sh per request, writing the request JSON to
/// stdin and reading the reply JSON from stdout.
class SubprocessScorer final : public SoundnessScorer {
 public:
  SubprocessScorer(std::string command, std::chrono::milliseconds timeout);
  std::string id() const override { return "subprocess:" + command_; }
  nlohmann::json score(const nlohmann::json& request) override;

 private:
  std::string command_;
  std::chrono::milliseconds timeout_;
};

class HttpScorer final : public SoundnessScorer {
 public:
  HttpScorer(std::string url, std::chrono::milliseconds timeout);
  std::string id() const override { return "http:" + url_; }
  nlohmann::json score(const nlohmann::json& request) override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

/// Which ratings a scenario is eligible for.
struct ApplicabilityRule {
  bool praise_requires_correct_steps = true;
  bool error_requires_incorrect_steps = true;

  bool praise_applies(const TutoringScenario& s) const;
  bool error_applies(const TutoringScenario& s) const;
};

/// Never fabricates a rating: scorer failures leave ratings empty and set
/// `error`; ratings outside {0, 1} are treated as failures.
SoundnessScore score_soundness(const GenerationRecord& record, const TutoringScenario& scenario,
                               SoundnessScorer& scorer, const ApplicabilityRule& rule = {});

// ---------------------------------------------------------------------------
// Aggregation

enum class QualityMetric { ErrorResponse, Praise, Intention, Delimiter, Count };

inline constexpr std::array<QualityMetric, 5> kAllQualityMetrics = {
    QualityMetric::ErrorResponse, QualityMetric::Praise, QualityMetric::Intention,
    QualityMetric::Delimiter, QualityMetric::Count};

std::string_view metric_key(QualityMetric m);
std::string_view metric_label(QualityMetric m);

/// Per-response outcome fed to aggregation.
struct QualityObservation {
  std::string model_name;
  std::string scenario_id;
  std::string variant_key;
  FormatCheckResult format;
  SoundnessScore soundness;
};

void to_json(nlohmann::json& j, const QualityObservation& o);
void from_json(const nlohmann::json& j, QualityObservation& o);

struct QualityRow {
  QualityMetric metric{};
  int successes = 0;
  int denominator = 0;
  std::optional<ProportionEstimate> estimate;  // nullopt: not computable
};

struct ModelQuality {
  std::string model_name;
  std::array<QualityRow, 5> rows;
};

/// Five rows per model, each over its applicable denominator: format rows
/// count every observation; rating rows count observations carrying a rating.
std::vector<ModelQuality> aggregate_quality(const std::vector<std::string>& models,
                                            const std::vector<QualityObservation>& observations,
                                            double confidence = 0.95);

nlohmann::json quality_to_json(const std::vector<ModelQuality>& table);
std::vector<ModelQuality> quality_from_json(const nlohmann::json& j);

}  // namespace tutorbench
