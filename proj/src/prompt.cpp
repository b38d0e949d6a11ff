#include "tutorbench/prompt.hpp"

#include <fmt/format.h>

#include <algorithm>

#include <nlohmann/json.hpp>

#include "tutorbench/error.hpp"
#include "tutorbench/hashing.hpp"
#include "tutorbench/jsonl.hpp"

namespace tutorbench {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

bool is_required(std::string_view name) {
  for (const auto& r : PromptTemplate::required_placeholders()) {
    if (r == name) return true;
  }
  return false;
}

void append_literal(std::vector<TemplatePiece>& pieces, std::string_view text,
                    std::optional<ContextComponent> section) {
  if (text.empty()) return;
  if (!pieces.empty() && pieces.back().kind == TemplatePiece::Kind::Literal &&
      pieces.back().section == section) {
    pieces.back().text += text;
    return;
  }
  pieces.push_back({TemplatePiece::Kind::Literal, std::string(text), section});
}

void scan_line(std::string_view line, std::size_t line_no, std::optional<ContextComponent> section,
               std::vector<TemplatePiece>& pieces) {
  std::string literal;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '{') {
      if (i + 1 < line.size() && line[i + 1] == '{') {
        literal += '{';
        ++i;
        continue;
      }
      const auto close = line.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw TemplateError(fmt::format("line {}: unterminated placeholder", line_no));
      }
      const auto name = line.substr(i + 1, close - i - 1);
      if (name.empty() || !std::all_of(name.begin(), name.end(), is_placeholder_char)) {
        throw TemplateError(fmt::format("line {}: malformed placeholder '{{{}}}'", line_no, name));
      }
      if (!is_required(name)) {
        throw TemplateError(fmt::format("line {}: unknown placeholder '{}'", line_no, name));
      }
      append_literal(pieces, literal, section);
      literal.clear();
      pieces.push_back({TemplatePiece::Kind::Placeholder, std::string(name), section});
      i = close;
    } else if (c == '}') {
      if (i + 1 < line.size() && line[i + 1] == '}') {
        literal += '}';
        ++i;
        continue;
      }
      throw TemplateError(fmt::format("line {}: unbalanced '}}'", line_no));
    } else {
      literal += c;
    }
  }
  append_literal(pieces, literal, section);
}

std::string join_chat(const std::vector<ChatTurn>& chat) {
  std::vector<std::string> lines;
  lines.reserve(chat.size());
  for (const auto& turn : chat) {
    lines.push_back(fmt::format("{}: {}", turn.speaker == Speaker::Student ? "Student" : "Parent",
                                turn.text));
  }
  return format_string_list(lines);
}

}  // namespace

const std::vector<std::string>& PromptTemplate::required_placeholders() {
  static const std::vector<std::string> names = {
      "current_problem", "correct_steps",        "incorrect_steps", "next_step",
      "knowledge_components", "hints", "chat_history"};
  return names;
}

PromptTemplate parse_template(std::string text) {
  PromptTemplate t;
  t.template_text = std::move(text);
  const std::string_view all(t.template_text);

  std::optional<ContextComponent> open;
  std::size_t open_begin = 0;
  std::size_t open_line = 0;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < all.size()) {
    auto nl = all.find('\n', pos);
    const std::size_t next = nl == std::string_view::npos ? all.size() : nl + 1;
    const auto line = all.substr(pos, next - pos);
    ++line_no;
    const auto marker = trim(line);
    if (marker.starts_with("[[section ") && marker.ends_with("]]")) {
      const auto name = trim(marker.substr(10, marker.size() - 12));
      if (open) {
        throw TemplateError(fmt::format("line {}: section '{}' opened inside section '{}'",
                                        line_no, name, placeholder_name(*open)));
      }
      const auto c = component_from_placeholder(name);
      if (!c) throw TemplateError(fmt::format("line {}: unknown section '{}'", line_no, name));
      if (t.section_map.contains(*c)) {
        throw TemplateError(fmt::format("line {}: duplicate section '{}'", line_no, name));
      }
      open = c;
      open_begin = pos;
      open_line = line_no;
    } else if (marker == "[[end]]") {
      if (!open) throw TemplateError(fmt::format("line {}: [[end]] without open section", line_no));
      t.section_map[*open] = {open_begin, next};
      open.reset();
    } else {
      scan_line(line, line_no, open, t.pieces);
    }
    pos = next;
  }
  if (open) {
    throw TemplateError(fmt::format("line {}: section '{}' is never closed", open_line,
                                    placeholder_name(*open)));
  }

  for (const auto& name : PromptTemplate::required_placeholders()) {
    int count = 0;
    for (const auto& p : t.pieces) {
      if (p.kind == TemplatePiece::Kind::Placeholder && p.text == name) ++count;
    }
    if (count == 0) throw TemplateError(fmt::format("missing placeholder '{}'", name));
    if (count > 1) throw TemplateError(fmt::format("duplicate placeholder '{}'", name));
  }
  for (const auto& p : t.pieces) {
    if (p.kind != TemplatePiece::Kind::Placeholder) continue;
    const auto c = component_from_placeholder(p.text);
    if (c && p.section != c) {
      throw TemplateError(
          fmt::format("placeholder '{}' must sit inside section '{}'", p.text, p.text));
    }
    if (!c && p.section) {
      throw TemplateError(fmt::format("placeholder '{}' cannot sit inside section '{}'", p.text,
                                      placeholder_name(*p.section)));
    }
  }
  return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw TemplateError(e.what());
  }
  return parse_template(std::move(text));
}

std::string format_string_list(std::span<const std::string> items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += nlohmann::json(items[i]).dump();
  }
  out += ']';
  return out;
}

RenderedPrompt render(const PromptTemplate& t, const ResolvedContext& ctx) {
  if (ctx.current_problem.empty()) throw TemplateError("context missing current_problem");
  std::string out;
  out.reserve(t.template_text.size() + 512);
  for (const auto& p : t.pieces) {
    if (p.section && !ctx.component(*p.section)) continue;
    if (p.kind == TemplatePiece::Kind::Literal) {
      out += p.text;
    } else if (p.text == "current_problem") {
      out += ctx.current_problem;
    } else if (p.text == "chat_history") {
      out += join_chat(ctx.chat_history);
    } else {
      out += format_string_list(*ctx.component(*component_from_placeholder(p.text)));
    }
  }
  RenderedPrompt r;
  r.prompt_hash = sha256_hex(out);
  r.text = std::move(out);
  r.variant_key = ctx.variant_key;
  r.scenario_id = ctx.scenario_id;
  return r;
}

}  // namespace tutorbench
