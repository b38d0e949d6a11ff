#include <algorithm>
#include <cctype>

#include "tutorbench/quality.hpp"

namespace tutorbench {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

constexpr std::size_t kMaxClauseLength = 80;

}  // namespace

std::optional<BracketClause> find_intention_clause(std::string_view text) {
  for (std::size_t i = text.find('['); i != std::string_view::npos; i = text.find('[', i + 1)) {
    const auto close = text.find(']', i + 1);
    if (close == std::string_view::npos) return std::nullopt;
    const auto contents = text.substr(i + 1, close - i - 1);
    if (contents.empty() || contents.size() > kMaxClauseLength) continue;
    const bool has_letter = std::any_of(contents.begin(), contents.end(), [](char c) {
      return std::isalpha(static_cast<unsigned char>(c)) != 0;
    });
    if (has_letter) return BracketClause{i, close + 1, contents};
  }
  return std::nullopt;
}

ParsedResponse parse_response(std::string_view text) {
  ParsedResponse p;
  p.raw_text = std::string(text);
  p.has_delimiter = text.find('#') != std::string_view::npos;
  if (!p.has_delimiter) return p;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto hash = text.find('#', pos);
    const auto seg = trim(text.substr(pos, hash == std::string_view::npos ? text.npos : hash - pos));
    if (!seg.empty()) {
      Recommendation rec;
      if (const auto clause = find_intention_clause(seg)) {
        rec.intention = std::string(trim(clause->contents));
        const auto before = trim(seg.substr(0, clause->begin));
        const auto after = trim(seg.substr(clause->end));
        rec.body = std::string(before);
        if (!before.empty() && !after.empty()) rec.body += ' ';
        rec.body += after;
        if (rec.body.empty()) rec.body = std::string(seg);
      } else {
        rec.body = std::string(seg);
      }
      p.recommendations.push_back(std::move(rec));
    }
    if (hash == std::string_view::npos) break;
    pos = hash + 1;
  }
  return p;
}

std::string serialize_recommendations(const std::vector<Recommendation>& recs) {
  std::string out;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i > 0) out += " # ";
    if (recs[i].intention) out += "[" + *recs[i].intention + "] ";
    out += recs[i].body;
  }
  return out;
}

FormatCheckResult check_format(const ParsedResponse& p) {
  FormatCheckResult r;
  r.intention_pass = find_intention_clause(p.raw_text).has_value();
  r.delimiter_pass = p.has_delimiter;
  r.count_pass = r.delimiter_pass && p.recommendations.size() == 3;
  return r;
}

}  // namespace tutorbench
