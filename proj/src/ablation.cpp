#include "tutorbench/ablation.hpp"

#include <fmt/format.h>

#include "tutorbench/error.hpp"

namespace tutorbench {

std::string_view variant_key(std::optional<ContextComponent> removed) {
  if (!removed) return "full";
  switch (*removed) {
    case ContextComponent::CorrectSteps: return "no_correct";
    case ContextComponent::IncorrectSteps: return "no_incorrect";
    case ContextComponent::NextStep: return "no_next";
    case ContextComponent::KnowledgeComponents: return "no_kc";
    case ContextComponent::Hints: return "no_hints";
  }
  return "full";
}

std::optional<ContextComponent> removed_from_key(std::string_view key) {
  if (key == "full") return std::nullopt;
  for (auto c : kAllComponents) {
    if (variant_key(c) == key) return c;
  }
  throw Error(fmt::format("unknown variant key '{}'", key));
}

std::string_view placeholder_name(ContextComponent c) {
  switch (c) {
    case ContextComponent::CorrectSteps: return "correct_steps";
    case ContextComponent::IncorrectSteps: return "incorrect_steps";
    case ContextComponent::NextStep: return "next_step";
    case ContextComponent::KnowledgeComponents: return "knowledge_components";
    case ContextComponent::Hints: return "hints";
  }
  return "";
}

std::optional<ContextComponent> component_from_placeholder(std::string_view name) {
  for (auto c : kAllComponents) {
    if (placeholder_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view display_name(ContextComponent c) {
  switch (c) {
    case ContextComponent::CorrectSteps: return "Correct steps";
    case ContextComponent::IncorrectSteps: return "Incorrect steps";
    case ContextComponent::NextStep: return "Next steps";
    case ContextComponent::KnowledgeComponents: return "Knowledge components";
    case ContextComponent::Hints: return "Hints";
  }
  return "";
}

std::vector<ScenarioVariant> generate_variants(const TutoringScenario& s) {
  std::vector<ScenarioVariant> out;
  out.reserve(kVariantsPerScenario);
  out.push_back({s.scenario_id, std::nullopt, std::string(variant_key(std::nullopt))});
  for (auto c : kAllComponents) out.push_back({s.scenario_id, c, std::string(variant_key(c))});
  return out;
}

const std::optional<std::vector<std::string>>& ResolvedContext::component(
    ContextComponent c) const {
  switch (c) {
    case ContextComponent::CorrectSteps: return correct_steps;
    case ContextComponent::IncorrectSteps: return incorrect_steps;
    case ContextComponent::NextStep: return next_step;
    case ContextComponent::KnowledgeComponents: return knowledge_components;
    case ContextComponent::Hints: return hints;
  }
  return hints;
}

std::optional<std::vector<std::string>>& ResolvedContext::component(ContextComponent c) {
  return const_cast<std::optional<std::vector<std::string>>&>(
      std::as_const(*this).component(c));
}

ResolvedContext effective_context(const ScenarioVariant& v, const TutoringScenario& s) {
  if (v.scenario_id != s.scenario_id) {
    throw CorpusError(
        fmt::format("variant for '{}' resolved against '{}'", v.scenario_id, s.scenario_id));
  }
  ResolvedContext ctx;
  ctx.scenario_id = s.scenario_id;
  ctx.variant_key = std::string(variant_key(v.removed));
  ctx.current_problem = s.current_problem;
  ctx.correct_steps = s.correct_steps;
  ctx.incorrect_steps = s.incorrect_steps;
  ctx.next_step = s.next_step_suggestion;
  ctx.knowledge_components = s.knowledge_components;
  ctx.hints = s.hints;
  ctx.chat_history = s.chat_history;
  if (v.removed) ctx.component(*v.removed).reset();
  return ctx;
}

ResolvedContext effective_context(const ScenarioVariant& v, const Corpus& corpus) {
  const auto* s = corpus.find(v.scenario_id);
  if (s == nullptr) throw CorpusError(fmt::format("unknown scenario_id '{}'", v.scenario_id));
  return effective_context(v, *s);
}

}  // namespace tutorbench
