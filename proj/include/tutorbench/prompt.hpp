#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tutorbench/ablation.hpp"

namespace tutorbench {

// Template syntax
// ---------------
//   {name}            placeholder; names are fixed (see required_placeholders)
//   {{ and }}         literal braces
//   [[section NAME]]  on its own line, opens the droppable section for
//   [[end]]           component NAME; both marker lines are never rendered
//
// Each of the five ablatable placeholders must sit inside its own section.
// current_problem and chat_history must sit outside every section. When a
// component is removed, every line of its section disappears from the prompt.

struct TemplatePiece {
  enum class Kind { Literal, Placeholder };
  Kind kind = Kind::Literal;
  std::string text;  // literal text or placeholder name
  std::optional<ContextComponent> section;
};

struct SectionSpan {
  std::size_t begin = 0;  // byte offset of the opening marker line
  std::size_t end = 0;    // one past the closing marker line
};

struct PromptTemplate {
  std::string template_text;
  std::vector<TemplatePiece> pieces;
  std::map<ContextComponent, SectionSpan> section_map;

  static const std::vector<std::string>& required_placeholders();
};

/// Throws TemplateError naming the offending placeholder or marker.
PromptTemplate parse_template(std::string text);
PromptTemplate load_template(const std::filesystem::path& path);

struct RenderedPrompt {
  std::string text;
  std::string variant_key;
  std::string scenario_id;
  std::string prompt_hash;  // sha256 of text
};

/// ["a", "b"] with JSON string escaping.
std::string format_string_list(std::span<const std::string> items);

RenderedPrompt render(const PromptTemplate& t, const ResolvedContext& ctx);

}  // namespace tutorbench
