#include "tutorbench/corpus.hpp"

#include <fmt/format.h>

#include <unordered_set>

#include "tutorbench/error.hpp"
#include "tutorbench/jsonl.hpp"

namespace tutorbench {

namespace {

std::vector<std::string> string_list(const json& rec, std::size_t index, const char* field) {
  if (!rec.contains(field)) {
    throw CorpusError(fmt::format("scenario {}: field '{}' missing", index, field));
  }
  const auto& v = rec.at(field);
  if (!v.is_array()) {
    throw CorpusError(fmt::format("scenario {}: field '{}' must be an array", index, field));
  }
  std::vector<std::string> out;
  out.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_string()) {
      throw CorpusError(
          fmt::format("scenario {}: field '{}[{}]' must be a string", index, field, k));
    }
    out.push_back(v[k].get<std::string>());
  }
  return out;
}

std::string string_field(const json& rec, std::size_t index, const char* field) {
  if (!rec.contains(field)) {
    throw CorpusError(fmt::format("scenario {}: field '{}' missing", index, field));
  }
  if (!rec.at(field).is_string()) {
    throw CorpusError(fmt::format("scenario {}: field '{}' must be a string", index, field));
  }
  return rec.at(field).get<std::string>();
}

TutoringScenario parse_scenario(const json& rec, std::size_t index) {
  if (!rec.is_object()) throw CorpusError(fmt::format("scenario {}: not an object", index));
  TutoringScenario s;
  s.scenario_id = string_field(rec, index, "scenario_id");
  s.current_problem = string_field(rec, index, "current_problem");
  s.correct_steps = string_list(rec, index, "correct_steps");
  s.incorrect_steps = string_list(rec, index, "incorrect_steps");
  s.hints = string_list(rec, index, "hints");
  s.next_step_suggestion = string_list(rec, index, "next_step_suggestion");
  s.knowledge_components = string_list(rec, index, "knowledge_components");
  if (!rec.contains("chat_history")) {
    throw CorpusError(fmt::format("scenario {}: field 'chat_history' missing", index));
  }
  const auto& chat = rec.at("chat_history");
  if (!chat.is_array()) {
    throw CorpusError(fmt::format("scenario {}: field 'chat_history' must be an array", index));
  }
  for (std::size_t k = 0; k < chat.size(); ++k) {
    const auto& turn = chat[k];
    if (!turn.is_object() || !turn.contains("speaker") || !turn.contains("text") ||
        !turn["speaker"].is_string() || !turn["text"].is_string()) {
      throw CorpusError(fmt::format(
          "scenario {}: field 'chat_history[{}]' needs string speaker and text", index, k));
    }
    const auto speaker = turn["speaker"].get<std::string>();
    ChatTurn t;
    if (speaker == "student") {
      t.speaker = Speaker::Student;
    } else if (speaker == "parent") {
      t.speaker = Speaker::Parent;
    } else {
      throw CorpusError(fmt::format(
          "scenario {}: field 'chat_history[{}].speaker' has unknown value '{}'", index, k,
          speaker));
    }
    t.text = turn["text"].get<std::string>();
    s.chat_history.push_back(std::move(t));
  }
  return s;
}

}  // namespace

std::string_view speaker_name(Speaker s) { return s == Speaker::Student ? "student" : "parent"; }

const TutoringScenario* Corpus::find(std::string_view scenario_id) const {
  for (const auto& s : scenarios) {
    if (s.scenario_id == scenario_id) return &s;
  }
  return nullptr;
}

std::size_t Corpus::index_of(std::string_view scenario_id) const {
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (scenarios[i].scenario_id == scenario_id) return i;
  }
  throw CorpusError(fmt::format("unknown scenario_id '{}'", scenario_id));
}

std::vector<std::string> validate_scenario(const TutoringScenario& s) {
  std::vector<std::string> v;
  if (s.scenario_id.empty()) v.emplace_back("scenario_id empty");
  if (s.current_problem.empty()) v.emplace_back("current_problem empty");
  for (std::size_t k = 0; k < s.chat_history.size(); ++k) {
    if (s.chat_history[k].text.empty()) v.push_back(fmt::format("chat_history[{}].text empty", k));
  }
  return v;
}

void to_json(json& j, const ChatTurn& t) {
  j = json{{"speaker", speaker_name(t.speaker)}, {"text", t.text}};
}

void to_json(json& j, const TutoringScenario& s) {
  j = json{{"scenario_id", s.scenario_id},
           {"current_problem", s.current_problem},
           {"correct_steps", s.correct_steps},
           {"incorrect_steps", s.incorrect_steps},
           {"hints", s.hints},
           {"next_step_suggestion", s.next_step_suggestion},
           {"knowledge_components", s.knowledge_components},
           {"chat_history", s.chat_history}};
}

Corpus parse_corpus(const json& doc, std::string source_path) {
  if (!doc.is_object() || !doc.contains("scenarios") || !doc["scenarios"].is_array()) {
    throw CorpusError("corpus must be an object with a 'scenarios' array");
  }
  const auto& recs = doc["scenarios"];
  if (recs.empty()) throw CorpusError("empty corpus");

  Corpus corpus;
  corpus.source_path = std::move(source_path);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto s = parse_scenario(recs[i], i);
    if (auto violations = validate_scenario(s); !violations.empty()) {
      throw CorpusError(fmt::format("scenario {}: {}", i, violations.front()));
    }
    if (!seen.insert(s.scenario_id).second) {
      throw CorpusError(fmt::format("duplicate scenario_id '{}'", s.scenario_id));
    }
    corpus.scenarios.push_back(std::move(s));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw CorpusError(e.what());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
  return parse_corpus(doc, path.string());
}

json corpus_to_json(const Corpus& corpus, bool synthetic) {
  json doc = json::object();
  if (synthetic) {
    doc["synthetic"] = true;
    doc["note"] = "Synthetic fixture corpus. Not real tutoring data.";
  }
  doc["scenarios"] = corpus.scenarios;
  return doc;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, bool synthetic) {
  write_text_atomic(path, corpus_to_json(corpus, synthetic).dump(2) + "\n");
}

}  // namespace tutorbench
