#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace tutorbench {

enum class Speaker { Student, Parent };

struct ChatTurn {
  Speaker speaker = Speaker::Student;
  std::string text;

  bool operator==(const ChatTurn&) const = default;
};

/// One 30-second snapshot of tutor state. Steps and hints are opaque strings;
/// an empty list means the snapshot had no such events.
struct TutoringScenario {
  std::string scenario_id;
  std::string current_problem;
  std::vector<std::string> correct_steps;
  std::vector<std::string> incorrect_steps;
  std::vector<std::string> hints;
  std::vector<std::string> next_step_suggestion;
  std::vector<std::string> knowledge_components;
  std::vector<ChatTurn> chat_history;

  bool operator==(const TutoringScenario&) const = default;
};

/// Scenario order is the file order and defines the pairing index used when
/// comparing prompt conditions.
struct Corpus {
  std::vector<TutoringScenario> scenarios;
  std::string source_path;

  /// nullptr if absent.
  const TutoringScenario* find(std::string_view scenario_id) const;
  std::size_t index_of(std::string_view scenario_id) const;  // throws CorpusError
};

std::string_view speaker_name(Speaker s);

/// Every invariant violation, in field order. Empty means valid.
std::vector<std::string> validate_scenario(const TutoringScenario& s);

void to_json(nlohmann::json& j, const ChatTurn& t);
void to_json(nlohmann::json& j, const TutoringScenario& s);

/// Strict decoding: every field is a required key. Throws CorpusError naming
/// the scenario index and field.
Corpus parse_corpus(const nlohmann::json& doc, std::string source_path);
Corpus load_corpus(const std::filesystem::path& path);

nlohmann::json corpus_to_json(const Corpus& corpus, bool synthetic = false);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, bool synthetic = false);

}  // namespace tutorbench
