#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tutorbench/ablation.hpp"
#include "tutorbench/error.hpp"

using namespace tutorbench;
using tutorbench::testing::make_scenario;

TEST(Ablation, SixVariantsOriginalFirst) {
  const auto v = generate_variants(make_scenario("s1"));
  ASSERT_EQ(v.size(), kVariantsPerScenario);
  const std::vector<std::string> keys = {"full", "no_correct", "no_incorrect", "no_next", "no_kc", "no_hints"};
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(v[i].variant_key, keys[i]);
    EXPECT_EQ(v[i].scenario_id, "s1");
    EXPECT_EQ(v[i].removed, removed_from_key(keys[i]));
  }
  EXPECT_FALSE(v[0].removed.has_value());
}

TEST(Ablation, KeyAndPlaceholderMappingsInvert) {
  for (auto c : kAllComponents) {
    EXPECT_EQ(removed_from_key(variant_key(c)), c);
    EXPECT_EQ(component_from_placeholder(placeholder_name(c)), c);
    EXPECT_FALSE(display_name(c).empty());
  }
  EXPECT_EQ(removed_from_key("full"), std::nullopt);
  EXPECT_THROW(removed_from_key("no_chat"), Error);
  EXPECT_EQ(component_from_placeholder("chat_history"), std::nullopt);
}

TEST(Ablation, RemovedComponentIsAbsentOthersUntouched) {
  const auto s = make_scenario("s1");
  for (const auto& v : generate_variants(s)) {
    const auto ctx = effective_context(v, s);
    EXPECT_EQ(ctx.current_problem, s.current_problem);
    EXPECT_EQ(ctx.chat_history, s.chat_history);
    EXPECT_EQ(ctx.variant_key, v.variant_key);
    for (auto c : kAllComponents) {
      if (v.removed == c) {
        EXPECT_FALSE(ctx.component(c).has_value());
      } else {
        ASSERT_TRUE(ctx.component(c).has_value());
      }
    }
    EXPECT_EQ(*effective_context(generate_variants(s)[0], s).correct_steps, s.correct_steps);
  }
}

TEST(Ablation, EmptyListStaysDistinctFromRemoved) {
  auto s = make_scenario("s1");
  s.hints.clear();
  const auto full = effective_context(generate_variants(s)[0], s);
  ASSERT_TRUE(full.hints.has_value());
  EXPECT_TRUE(full.hints->empty());
  const auto no_hints = effective_context(generate_variants(s)[5], s);
  EXPECT_FALSE(no_hints.hints.has_value());
}

TEST(Ablation, CorpusLookupRejectsUnknownScenario) {
  Corpus c;
  c.scenarios = {make_scenario("a")};
  ScenarioVariant v{"zzz", std::nullopt, "full"};
  EXPECT_THROW(effective_context(v, c), CorpusError);
  v.scenario_id = "a";
  EXPECT_EQ(effective_context(v, c).scenario_id, "a");
}
