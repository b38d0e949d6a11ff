#include <fmt/format.h>

#include <array>
#include <cctype>
#include <cmath>

#include "tutorbench/backends.hpp"
#include "tutorbench/hashing.hpp"
#include "tutorbench/random.hpp"

namespace tutorbench {

namespace {

constexpr std::array<std::string_view, 6> kIntentions = {
    "Encourage child to continue", "Ask to self-explain", "Provide guidance",
    "Praise effort",               "Prompt reflection",   "Check understanding"};

constexpr std::array<std::string_view, 48> kWords = {
    "think",   "about",  "what",     "you",      "could",   "try",      "next",     "here",
    "maybe",   "start",  "by",       "looking",  "again",   "at",       "both",     "sides",
    "how",     "would",  "we",       "keep",     "it",      "balanced", "nice",     "work",
    "so",      "far",    "can",      "explain",  "your",    "idea",     "why",      "that",
    "helps",   "let's",  "slow",     "down",     "and",     "read",     "each",     "part",
    "carefully", "which", "operation", "undoes",  "this",    "one",      "together", "first"};

std::string_view reaction_phrase(ContextComponent c) {
  switch (c) {
    case ContextComponent::CorrectSteps:
      return "You already did great work on the earlier steps.";
    case ContextComponent::IncorrectSteps:
      return "Let's check that mistake together and find where the error crept in.";
    case ContextComponent::NextStep:
      return "Consider which move the tutor suggests taking now.";
    case ContextComponent::KnowledgeComponents:
      return "Remember the skill this step practices.";
    case ContextComponent::Hints:
      return "Use the hint shown on the screen.";
  }
  return "";
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

/// Rest of the first line that starts with `marker`, or nullopt.
std::optional<std::string_view> line_after(std::string_view text, std::string_view marker) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    if (line.starts_with(marker)) return trim(line.substr(marker.size()));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::nullopt;
}

}  // namespace

std::map<ContextComponent, std::string> MockChatOptions::default_markers() {
  return {{ContextComponent::CorrectSteps, "Correct steps so far:"},
          {ContextComponent::IncorrectSteps, "Incorrect attempts:"},
          {ContextComponent::NextStep, "Tutor-suggested next step:"},
          {ContextComponent::KnowledgeComponents, "Skills involved:"},
          {ContextComponent::Hints, "Hints shown:"}};
}

MockChatBackend::MockChatBackend(std::string model_name, MockChatOptions options)
    : model_name_(std::move(model_name)), options_(std::move(options)) {}

ChatReply MockChatBackend::complete(const RenderedPrompt& prompt) {
  // Sampling noise depends on the whole prompt; everything else depends only
  // on what this model attends to: the problem and whether each sensitive
  // section is in the prompt. Withholding an ignored component therefore
  // changes only the noise, while withholding a sensitive one switches the
  // whole response to a different mode.
  Rng noise(splitmix64(fnv1a64(model_name_ + '\n' + options_.style + '\n' + prompt.text)));
  if (uniform01(noise) < options_.failure_rate) {
    throw BackendError(BackendError::Kind::Permanent, "mock provider rejected the request");
  }
  const bool drop_delimiter = uniform01(noise) < options_.drop_delimiter_rate;
  const bool drop_intention = uniform01(noise) < options_.drop_intention_rate;
  int count = 3;
  if (uniform01(noise) < options_.single_recommendation_rate) {
    count = 1;
  } else if (uniform01(noise) < options_.extra_recommendation_rate) {
    count = 4;
  }

  std::string mode = model_name_ + '\n' + options_.style;
  std::vector<std::string_view> reactions;
  for (auto c : options_.sensitive_to) {
    const auto it = options_.markers.find(c);
    if (it == options_.markers.end()) continue;
    const auto content = line_after(prompt.text, it->second);
    mode += content ? '1' : '0';
    if (content && !content->empty() && *content != "[]") reactions.push_back(reaction_phrase(c));
  }
  Rng style(splitmix64(fnv1a64(mode)));
  const auto problem = line_after(prompt.text, options_.anchor);

  std::string out;
  for (int r = 0; r < count; ++r) {
    std::string rec;
    const auto intention = kIntentions[uniform_below(style, kIntentions.size())];
    if (!drop_intention) rec += fmt::format("[{}] ", intention);
    if (r == 0 && problem && !problem->empty()) rec += fmt::format("Look at {}. ", *problem);
    for (int w = 0; w < 6; ++w) {
      if (w > 0) rec += ' ';
      rec += kWords[uniform_below(style, kWords.size())];
    }
    rec += ' ';
    rec += kWords[uniform_below(noise, kWords.size())];
    rec += '?';
    for (auto phrase : reactions) {
      rec += ' ';
      rec += phrase;
    }
    if (r > 0) out += drop_delimiter ? " " : " # ";
    out += rec;
  }
  return {out, "1970-01-01T00:00:00Z"};
}

MockEmbeddingBackend::MockEmbeddingBackend(std::string model_name, int dimension)
    : model_name_(std::move(model_name)), dimension_(dimension) {}

const std::vector<double>& MockEmbeddingBackend::token_vector(const std::string& token) {
  std::lock_guard lock(mu_);
  auto it = tokens_.find(token);
  if (it != tokens_.end()) return it->second;
  Rng rng(splitmix64(fnv1a64(model_name_ + '\n' + token)));
  std::vector<double> v(static_cast<std::size_t>(dimension_));
  for (auto& x : v) x = standard_normal(rng);
  return tokens_.emplace(token, std::move(v)).first->second;
}

std::vector<float> MockEmbeddingBackend::embed(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) tokens.emplace_back(text);

  std::vector<double> sum(static_cast<std::size_t>(dimension_), 0.0);
  for (const auto& t : tokens) {
    const auto& v = token_vector(t);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  double norm = 0.0;
  for (double x : sum) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<float> out(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) out[i] = static_cast<float>(sum[i] / norm);
  return out;
}

}  // namespace tutorbench
