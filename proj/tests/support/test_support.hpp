#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <random>
#include <string>

#include "tutorbench/corpus.hpp"
#include "tutorbench/jsonl.hpp"

namespace tutorbench::testing {

inline std::filesystem::path source_dir() { return TUTORBENCH_SOURCE_DIR; }
inline std::filesystem::path cli_path() { return TUTORBENCH_CLI; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tutorbench-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline TutoringScenario make_scenario(std::string id) {
  TutoringScenario s;
  s.scenario_id = std::move(id);
  s.current_problem = "2x + 3 = 11";
  s.correct_steps = {"2x = 8"};
  s.incorrect_steps = {"x = 7"};
  s.hints = {"Divide both sides by 2."};
  s.next_step_suggestion = {"Divide by 2 on both sides: x = 4"};
  s.knowledge_components = {"divide-const"};
  s.chat_history = {{Speaker::Student, "is this right?"}, {Speaker::Parent, "check the last step"}};
  return s;
}

/// A three-model mock config. `overrides` is merged over the defaults.
inline nlohmann::json mock_config(const std::filesystem::path& corpus,
                                  const std::filesystem::path& run_dir, int dimension = 64,
                                  int B = 200) {
  using nlohmann::json;
  return json{
      {"corpus", corpus.string()},
      {"template", (source_dir() / "assets" / "prompt_template.txt").string()},
      {"run_dir", run_dir.string()},
      {"bootstrap_iterations", B},
      {"seed", 7},
      {"parallelism", 4},
      {"models",
       json::array({json{{"name", "mock-a"},
                         {"mock", {{"style", "terse"}, {"drop_delimiter_rate", 0.3},
                                   {"single_recommendation_rate", 0.1},
                                   {"extra_recommendation_rate", 0.1}}}},
                    json{{"name", "mock-b"},
                         {"mock", {{"style", "supportive"}, {"sensitive_to", {"incorrect_steps"}}}}},
                    json{{"name", "mock-c"}, {"mock", {{"style", "socratic"}}}}})},
      {"embedding", {{"model", "mock-embed"}, {"dimension", dimension}}},
      {"scorer", {{"kind", "mock"}}}};
}

inline std::filesystem::path write_config(const std::filesystem::path& path, const nlohmann::json& cfg) {
  write_text_atomic(path, cfg.dump(2));
  return path;
}

}  // namespace tutorbench::testing
