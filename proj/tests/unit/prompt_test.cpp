#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/hashing.hpp"
#include "tutorbench/prompt.hpp"

using namespace tutorbench;
using tutorbench::testing::make_scenario;
using ::testing::HasSubstr;
using ::testing::Not;

namespace {

const std::string kSections =
    "[[section correct_steps]]\nC: {correct_steps}\n[[end]]\n"
    "[[section incorrect_steps]]\nI: {incorrect_steps}\n[[end]]\n"
    "[[section next_step]]\nN: {next_step}\n[[end]]\n"
    "[[section knowledge_components]]\nK: {knowledge_components}\n[[end]]\n"
    "[[section hints]]\nH: {hints}\n[[end]]\n";

std::string minimal() { return "P: {current_problem}\n" + kSections + "Chat: {chat_history}\n"; }

std::string parse_error(const std::string& text) {
  try {
    parse_template(text);
  } catch (const TemplateError& e) {
    return e.what();
  }
  return "";
}

PromptTemplate shipped() {
  return load_template(tutorbench::testing::source_dir() / "assets" / "prompt_template.txt");
}

}  // namespace

TEST(Template, ShippedTemplateParses) {
  const auto t = shipped();
  EXPECT_EQ(t.section_map.size(), 5u);
}

TEST(Template, RejectsUnknownMissingAndDuplicatePlaceholders) {
  EXPECT_THAT(parse_error(minimal() + "{student_name}\n"), HasSubstr("unknown placeholder 'student_name'"));
  EXPECT_THAT(parse_error("P: {current_problem}\n" + kSections), HasSubstr("missing placeholder 'chat_history'"));
  EXPECT_THAT(parse_error(minimal() + "{current_problem}\n"), HasSubstr("duplicate placeholder 'current_problem'"));
  EXPECT_THAT(parse_error(minimal() + "{oops\n"), HasSubstr("unterminated placeholder"));
  EXPECT_THAT(parse_error(minimal() + "x } y\n"), HasSubstr("unbalanced"));
}

TEST(Template, RejectsBadSections) {
  EXPECT_THAT(parse_error(minimal() + "[[section hints]]\n[[end]]\n"), HasSubstr("duplicate section 'hints'"));
  EXPECT_THAT(parse_error(minimal() + "[[section chat]]\n[[end]]\n"), HasSubstr("unknown section 'chat'"));
  EXPECT_THAT(parse_error(minimal() + "[[end]]\n"), HasSubstr("without open section"));
  EXPECT_THAT(parse_error("P: {current_problem}\n[[section hints]]\n[[section correct_steps]]\n"),
              HasSubstr("opened inside"));
  EXPECT_THAT(parse_error("P: {current_problem}\n[[section hints]]\nH: {hints}\n"), HasSubstr("never closed"));
}

TEST(Template, ComponentPlaceholdersMustSitInTheirOwnSection) {
  std::string swapped = minimal();
  swapped.replace(swapped.find("H: {hints}"), 10, "H: {hints} {next_step}");
  swapped.replace(swapped.find("N: {next_step}"), 14, "N:");
  EXPECT_THAT(parse_error(swapped), HasSubstr("'next_step' must sit inside section 'next_step'"));

  std::string inside = "[[section hints]]\nP: {current_problem}\nH: {hints}\n[[end]]\n" + kSections.substr(0, kSections.find("[[section hints]]")) +
                       "Chat: {chat_history}\n";
  EXPECT_THAT(parse_error(inside), HasSubstr("'current_problem' cannot sit inside section 'hints'"));
}

TEST(Render, FullPromptContainsEveryComponent) {
  const auto s = make_scenario("s1");
  const auto p = render(parse_template(minimal()), effective_context(generate_variants(s)[0], s));
  EXPECT_EQ(p.text,
            "P: 2x + 3 = 11\nC: [\"2x = 8\"]\nI: [\"x = 7\"]\nN: [\"Divide by 2 on both sides: x = 4\"]\n"
            "K: [\"divide-const\"]\nH: [\"Divide both sides by 2.\"]\n"
            "Chat: [\"Student: is this right?\", \"Parent: check the last step\"]\n");
  EXPECT_EQ(p.prompt_hash, sha256_hex(p.text));
  EXPECT_EQ(p.variant_key, "full");
  EXPECT_EQ(p.scenario_id, "s1");
}

TEST(Render, RemovingAComponentDropsItsWholeSection) {
  const auto s = make_scenario("s1");
  const auto t = parse_template(minimal());
  const auto full = render(t, effective_context(generate_variants(s)[0], s));
  const auto no_hints = render(t, effective_context(generate_variants(s)[5], s));
  EXPECT_THAT(no_hints.text, Not(HasSubstr("H:")));
  std::string expected = full.text;
  expected.erase(expected.find("H: "), std::string("H: [\"Divide both sides by 2.\"]\n").size());
  EXPECT_EQ(no_hints.text, expected);
}

TEST(Render, EmptyListRendersAsEmptyBrackets) {
  auto s = make_scenario("s1");
  s.incorrect_steps.clear();
  const auto p = render(parse_template(minimal()), effective_context(generate_variants(s)[0], s));
  EXPECT_THAT(p.text, HasSubstr("I: []\n"));
}

TEST(Render, BraceEscapesAndJsonQuoting) {
  auto t = parse_template("{{literal}} {current_problem}\n" + kSections + "{chat_history}\n");
  auto s = make_scenario("s1");
  s.hints = {"say \"hi\""};
  const auto p = render(t, effective_context(generate_variants(s)[0], s));
  EXPECT_TRUE(p.text.starts_with("{literal} 2x + 3 = 11\n"));
  EXPECT_THAT(p.text, HasSubstr(R"(H: ["say \"hi\""])"));
}

TEST(Render, VariantsOfShippedTemplateHaveDistinctHashes) {
  const auto t = shipped();
  const auto s = make_scenario("s1");
  std::set<std::string> hashes;
  for (const auto& v : generate_variants(s)) hashes.insert(render(t, effective_context(v, s)).prompt_hash);
  EXPECT_EQ(hashes.size(), kVariantsPerScenario);
}

TEST(Render, RequiresCurrentProblem) {
  auto s = make_scenario("s1");
  auto ctx = effective_context(generate_variants(s)[0], s);
  ctx.current_problem.clear();
  EXPECT_THROW(render(shipped(), ctx), TemplateError);
}

TEST(Render, IsDeterministic) {
  const auto s = make_scenario("s1");
  const auto ctx = effective_context(generate_variants(s)[2], s);
  EXPECT_EQ(render(shipped(), ctx).text, render(shipped(), ctx).text);
}
