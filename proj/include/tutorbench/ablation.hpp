#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tutorbench/corpus.hpp"

namespace tutorbench {

/// The five context components that can be withheld from a prompt, in
/// canonical order.
enum class ContextComponent { CorrectSteps, IncorrectSteps, NextStep, KnowledgeComponents, Hints };

inline constexpr std::array<ContextComponent, 5> kAllComponents = {
    ContextComponent::CorrectSteps, ContextComponent::IncorrectSteps, ContextComponent::NextStep,
    ContextComponent::KnowledgeComponents, ContextComponent::Hints};

inline constexpr std::size_t kVariantsPerScenario = kAllComponents.size() + 1;

/// Persisted keys: "full", "no_correct", "no_incorrect", "no_next", "no_kc",
/// "no_hints". These strings are part of the on-disk schema.
std::string_view variant_key(std::optional<ContextComponent> removed);

/// Inverse of variant_key. Throws Error on an unknown key.
std::optional<ContextComponent> removed_from_key(std::string_view key);

/// Template placeholder / section name, e.g. "knowledge_components".
std::string_view placeholder_name(ContextComponent c);
std::optional<ContextComponent> component_from_placeholder(std::string_view name);

/// Human label used in reports, e.g. "Knowledge components".
std::string_view display_name(ContextComponent c);

/// Identifies a prompt condition. Holds no scenario data of its own.
struct ScenarioVariant {
  std::string scenario_id;
  std::optional<ContextComponent> removed;
  std::string variant_key;

  bool operator==(const ScenarioVariant&) const = default;
};

/// Original first, then one variant per component in canonical order.
std::vector<ScenarioVariant> generate_variants(const TutoringScenario& s);

/// A scenario as the prompt renderer sees it. A removed component is
/// std::nullopt, which is distinct from a present-but-empty list.
struct ResolvedContext {
  std::string scenario_id;
  std::string variant_key;
  std::string current_problem;
  std::optional<std::vector<std::string>> correct_steps;
  std::optional<std::vector<std::string>> incorrect_steps;
  std::optional<std::vector<std::string>> next_step;
  std::optional<std::vector<std::string>> knowledge_components;
  std::optional<std::vector<std::string>> hints;
  std::vector<ChatTurn> chat_history;

  const std::optional<std::vector<std::string>>& component(ContextComponent c) const;
  std::optional<std::vector<std::string>>& component(ContextComponent c);
};

ResolvedContext effective_context(const ScenarioVariant& v, const TutoringScenario& s);

/// Throws CorpusError for an unknown scenario_id.
ResolvedContext effective_context(const ScenarioVariant& v, const Corpus& corpus);

}  // namespace tutorbench
