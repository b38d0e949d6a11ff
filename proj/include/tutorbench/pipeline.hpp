#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tutorbench/analysis.hpp"
#include "tutorbench/backends.hpp"
#include "tutorbench/quality.hpp"
#include "tutorbench/stats.hpp"

namespace tutorbench {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration

enum class ScorerKind { None, Mock, Subprocess, Http };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Mock;
  std::string command;
  std::string url;
  std::chrono::milliseconds timeout{30000};
  double mock_praise_rate = 0.7;
  double mock_error_rate = 0.5;
};

/// Resolved form of the declarative run config. Relative paths in the file
/// are resolved against the file's directory.
struct RunConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path template_path;
  std::filesystem::path run_dir;
  std::vector<ModelConfig> models;
  EmbeddingConfig embedding;
  int bootstrap_iterations = 1000;
  std::uint64_t seed = 0;
  int parallelism = 4;
  double confidence = 0.95;
  ScorerConfig scorer;
  ApplicabilityRule applicability;
  bool pca_full_only = false;  // fit PCA on the unablated responses only
  double ellipse_n_sigma = 2.0;

  void validate() const;  // throws ConfigError
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Everything except run_dir, in a fixed key order. Stored in the manifest.
nlohmann::json config_to_json(const RunConfig& cfg);

std::unique_ptr<SoundnessScorer> make_scorer(const ScorerConfig& cfg);

// ---------------------------------------------------------------------------
// Manifest

enum class Stage { Validate, Ablate, Generate, Embed, Test, Quality, Pca, Report };

inline constexpr std::array<Stage, 8> kAllStages = {Stage::Validate, Stage::Ablate,  Stage::Generate,
                                                    Stage::Embed,    Stage::Test,    Stage::Quality,
                                                    Stage::Pca,      Stage::Report};

std::string_view stage_name(Stage s);
/// Throws UsageError for an unknown name.
Stage stage_from_name(std::string_view name);
/// Stages that must be complete before `s` may run.
std::vector<Stage> stage_prerequisites(Stage s);

class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunManifest {
  std::string run_id;  // hash of the inputs below
  std::string corpus_path;
  std::string corpus_sha256;
  std::string template_path;
  std::string template_sha256;
  nlohmann::json config;
  std::string tool_version{kToolVersion};
  std::map<Stage, bool> completed;

  bool is_complete(Stage s) const;
  /// True when both manifests describe the same inputs.
  bool same_inputs(const RunManifest& other) const;
};

inline constexpr std::string_view kManifestFile = "manifest.json";

RunManifest make_manifest(const RunConfig& cfg);
nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
RunManifest read_manifest(const std::filesystem::path& run_dir);
void write_manifest(const std::filesystem::path& run_dir, const RunManifest& m);

// ---------------------------------------------------------------------------
// Stages

/// Hooks for tests: the interruption limit and injectable backends.
struct RunOptions {
  std::optional<std::size_t> generation_limit;
  Sleeper sleep = real_sleep;
  ChatBackendFactory chat_factory = make_chat_backend;
  std::function<std::unique_ptr<EmbeddingBackend>(const EmbeddingConfig&)> embedding_factory =
      make_embedding_backend;
  std::function<std::unique_ptr<SoundnessScorer>(const ScorerConfig&)> scorer_factory = make_scorer;
};

struct StageOutcome {
  Stage stage{};
  bool completed = false;  // false when interrupted
};

struct RunOutcome {
  std::filesystem::path run_dir;
  std::vector<StageOutcome> executed;  // stages that ran in this call
  bool complete = false;
};

/// Creates or resumes the run directory named by the config and runs every
/// incomplete stage in order. A directory holding a different run is an error.
RunOutcome cmd_run(const std::filesystem::path& config_path, const RunOptions& options = {});

/// Runs one stage of an existing run. Throws PipelineError when a
/// prerequisite is incomplete.
StageOutcome cmd_stage(Stage stage, const std::filesystem::path& run_dir,
                       const RunOptions& options = {});

// Stage artifact names.
inline constexpr std::string_view kVariantsFile = "variants.jsonl";
inline constexpr std::string_view kAdaptivityFile = "adaptivity.json";
inline constexpr std::string_view kQualityFile = "quality.json";
inline constexpr std::string_view kFailuresFile = "failures.jsonl";
inline constexpr std::string_view kReportMarkdown = "report.md";
inline constexpr std::string_view kReportJson = "report.json";
inline constexpr std::string_view kReportCsv = "report.csv";

std::string adaptivity_cell_file_name(std::string_view model_name, ContextComponent c);
std::string quality_file_name(std::string_view model_name);

// ---------------------------------------------------------------------------
// Report

struct FailureEntry {
  std::string stage;
  std::string model_name;
  std::string scenario_id;
  std::string variant_key;
  std::string error;
};

struct ModelCounts {
  std::string model_name;
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t embedded = 0;
};

struct ReportBundle {
  std::string run_id;
  std::vector<std::string> models;
  std::vector<AdaptivityCell> adaptivity;
  std::vector<ModelQuality> quality;
  std::vector<double> pca_explained_variance_ratio;
  std::string pca_points_file;
  std::vector<ModelCounts> counts;
  std::vector<FailureEntry> failures;
};

inline constexpr double kSignificanceAlpha = 0.05;

/// Column order of the adaptivity table.
inline constexpr std::array<ContextComponent, 5> kReportComponentOrder = {
    ContextComponent::CorrectSteps, ContextComponent::IncorrectSteps, ContextComponent::NextStep,
    ContextComponent::Hints, ContextComponent::KnowledgeComponents};

/// ".035", "1.000": three decimals without the leading zero.
std::string format_p_value(double p);
/// "2.36, .035*"; "n/a" stands in for an undefined effect size.
std::string format_adaptivity_cell(std::optional<double> d, double p);
/// "92.49% ± 5.42%", or "n/a" when not computable.
std::string format_proportion(const std::optional<ProportionEstimate>& e);

std::string render_markdown(const ReportBundle& r);
nlohmann::json render_json(const ReportBundle& r);
std::string render_csv(const ReportBundle& r);

/// Reads the persisted stage outputs of a run. Throws PipelineError unless the
/// test and quality stages are complete.
ReportBundle load_report_bundle(const std::filesystem::path& run_dir);

enum class ReportFormat { Markdown, Json, Csv };
ReportFormat report_format_from_name(std::string_view name);  // throws UsageError

/// Writes report.md, report.json, report.csv and failures.jsonl, and returns
/// the rendering in `format`.
std::string cmd_report(const std::filesystem::path& run_dir,
                       ReportFormat format = ReportFormat::Markdown);

}  // namespace tutorbench
