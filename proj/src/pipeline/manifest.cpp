#include <fmt/format.h>

#include "tutorbench/hashing.hpp"
#include "tutorbench/jsonl.hpp"
#include "tutorbench/pipeline.hpp"

namespace tutorbench {

namespace fs = std::filesystem;

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Validate: return "validate";
    case Stage::Ablate: return "ablate";
    case Stage::Generate: return "generate";
    case Stage::Embed: return "embed";
    case Stage::Test: return "test";
    case Stage::Quality: return "quality";
    case Stage::Pca: return "pca";
    case Stage::Report: return "report";
  }
  return "";
}

Stage stage_from_name(std::string_view name) {
  for (auto s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  throw UsageError(fmt::format(
      "unknown stage '{}' (expected validate, ablate, generate, embed, test, quality, pca or report)",
      name));
}

std::vector<Stage> stage_prerequisites(Stage s) {
  switch (s) {
    case Stage::Validate: return {};
    case Stage::Ablate: return {Stage::Validate};
    case Stage::Generate: return {Stage::Ablate};
    case Stage::Embed: return {Stage::Generate};
    case Stage::Test: return {Stage::Embed};
    case Stage::Quality: return {Stage::Generate};
    case Stage::Pca: return {Stage::Embed};
    case Stage::Report: return {Stage::Test, Stage::Quality, Stage::Pca};
  }
  return {};
}

bool RunManifest::is_complete(Stage s) const {
  const auto it = completed.find(s);
  return it != completed.end() && it->second;
}

bool RunManifest::same_inputs(const RunManifest& other) const {
  return run_id == other.run_id && corpus_sha256 == other.corpus_sha256 &&
         template_sha256 == other.template_sha256 && config == other.config &&
         tool_version == other.tool_version;
}

RunManifest make_manifest(const RunConfig& cfg) {
  RunManifest m;
  m.corpus_path = cfg.corpus_path.string();
  m.corpus_sha256 = sha256_file(cfg.corpus_path);
  m.template_path = cfg.template_path.string();
  m.template_sha256 = sha256_file(cfg.template_path);
  m.config = config_to_json(cfg);
  const json identity = {{"corpus_sha256", m.corpus_sha256},
                         {"template_sha256", m.template_sha256},
                         {"config", m.config},
                         {"tool_version", m.tool_version}};
  m.run_id = sha256_hex(identity.dump()).substr(0, 16);
  for (auto s : kAllStages) m.completed[s] = false;
  return m;
}

json manifest_to_json(const RunManifest& m) {
  json stages = json::object();
  for (auto s : kAllStages) stages[std::string(stage_name(s))] = m.is_complete(s);
  return {{"run_id", m.run_id},
          {"tool_version", m.tool_version},
          {"corpus", {{"path", m.corpus_path}, {"sha256", m.corpus_sha256}}},
          {"template", {{"path", m.template_path}, {"sha256", m.template_sha256}}},
          {"bootstrap_iterations", m.config.at("bootstrap_iterations")},
          {"seed", m.config.at("seed")},
          {"config", m.config},
          {"stages", stages}};
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.corpus_path = j.at("corpus").at("path").get<std::string>();
    m.corpus_sha256 = j.at("corpus").at("sha256").get<std::string>();
    m.template_path = j.at("template").at("path").get<std::string>();
    m.template_sha256 = j.at("template").at("sha256").get<std::string>();
    m.config = j.at("config");
    for (auto s : kAllStages) m.completed[s] = j.at("stages").value(std::string(stage_name(s)), false);
    return m;
  } catch (const json::exception& e) {
    throw PipelineError(fmt::format("malformed manifest: {}", e.what()));
  }
}

RunManifest read_manifest(const fs::path& run_dir) {
  const auto path = run_dir / kManifestFile;
  if (!fs::exists(path)) throw PipelineError(fmt::format("{} is not a run directory", run_dir.string()));
  try {
    return manifest_from_json(json::parse(read_text(path)));
  } catch (const json::parse_error& e) {
    throw PipelineError(fmt::format("malformed manifest: {}", e.what()));
  }
}

void write_manifest(const fs::path& run_dir, const RunManifest& m) {
  write_text_atomic(run_dir / kManifestFile, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace tutorbench
