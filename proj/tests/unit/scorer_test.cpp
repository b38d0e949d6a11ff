#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "test_support.hpp"
#include "tutorbench/quality.hpp"

#include <httplib.h>

using namespace tutorbench;
using namespace std::chrono_literals;
using tutorbench::testing::make_scenario;
using tutorbench::testing::TempDir;
using ::testing::HasSubstr;

namespace {

GenerationRecord record(std::string text) {
  GenerationRecord r;
  r.scenario_id = "s1";
  r.variant_key = "full";
  r.model_name = "m";
  r.response_text = std::move(text);
  r.ok = true;
  return r;
}

class CountingScorer final : public SoundnessScorer {
 public:
  explicit CountingScorer(json reply) : reply_(std::move(reply)) {}
  std::string id() const override { return "counting"; }
  json score(const json&) override {
    ++calls;
    return reply_;
  }
  int calls = 0;

 private:
  json reply_;
};

}  // namespace

TEST(MockScorer, DeterministicAndRateControlled) {
  MockScorer s(0.7, 0.5);
  const json req = {{"response_text", "hello"}};
  EXPECT_EQ(s.score(req), s.score(req));
  int praise = 0;
  for (int i = 0; i < 2000; ++i) praise += s.score({{"response_text", std::to_string(i)}})["praise"].get<int>();
  EXPECT_NEAR(praise / 2000.0, 0.7, 0.05);
  EXPECT_EQ(MockScorer(0, 0, 1).score(req)["praise"], 1);
}

TEST(SubprocessScorer, ReadsReplyAndReceivesRequest) {
  TempDir dir;
  const auto seen = dir / "request.json";
  SubprocessScorer s("cat > '" + seen.string() + "'; echo '{\"praise\": 1, \"error_response\": null}'", 5000ms);
  const auto reply = s.score({{"response_text", "hi"}, {"scenario", {{"scenario_id", "s1"}}}});
  EXPECT_EQ(reply["praise"], 1);
  EXPECT_TRUE(reply["error_response"].is_null());
  const auto req = json::parse(read_text(seen));
  EXPECT_EQ(req["response_text"], "hi");
  EXPECT_EQ(req["scenario"]["scenario_id"], "s1");
}

TEST(SubprocessScorer, FailuresBecomeErrors) {
  EXPECT_THROW(SubprocessScorer("exit 3", 5000ms).score({}), Error);
  EXPECT_THROW(SubprocessScorer("echo not-json", 5000ms).score({}), Error);
  const auto start = std::chrono::steady_clock::now();
  try {
    SubprocessScorer("sleep 10", 200ms).score({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_THAT(e.what(), HasSubstr("timed out"));
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, 5s);
}

TEST(SubprocessScorer, ScorerThatIgnoresStdinDoesNotKillUs) {
  SubprocessScorer s("echo '{\"praise\": 0}'", 5000ms);
  const json big = {{"response_text", std::string(1 << 20, 'x')}};
  EXPECT_EQ(s.score(big)["praise"], 0);
}

TEST(HttpScorer, PostsRequestAndParsesReply) {
  httplib::Server server;
  std::string body;
  server.Post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    body = req.body;
    res.set_content(R"({"praise": 0, "error_response": 1})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  HttpScorer s("http://127.0.0.1:" + std::to_string(port) + "/score", 5000ms);
  const auto reply = s.score({{"response_text", "x"}});
  server.stop();
  t.join();
  EXPECT_EQ(reply["error_response"], 1);
  EXPECT_EQ(json::parse(body)["response_text"], "x");
}

TEST(Soundness, ApplicabilityIsJudgedOnTheScenario) {
  CountingScorer scorer(json{{"praise", 1}, {"error_response", 1}});
  auto s = make_scenario("s1");
  auto r = score_soundness(record("x"), s, scorer);
  EXPECT_EQ(r.praise_rating, 1);
  EXPECT_EQ(r.error_response_rating, 1);
  EXPECT_EQ(r.scorer_id, "counting");

  s.correct_steps.clear();
  r = score_soundness(record("x"), s, scorer);
  EXPECT_FALSE(r.praise_rating);
  EXPECT_EQ(r.error_response_rating, 1);

  s.incorrect_steps.clear();
  const int before = scorer.calls;
  r = score_soundness(record("x"), s, scorer);
  EXPECT_EQ(scorer.calls, before);
  EXPECT_FALSE(r.praise_rating || r.error_response_rating);

  ApplicabilityRule always{false, false};
  r = score_soundness(record("x"), s, scorer, always);
  EXPECT_EQ(r.praise_rating, 1);
}

TEST(Soundness, InvalidRatingsAndScorerErrorsAreNeverFabricated) {
  const auto s = make_scenario("s1");
  CountingScorer bad(json{{"praise", 2}});
  auto r = score_soundness(record("x"), s, bad);
  EXPECT_FALSE(r.praise_rating || r.error_response_rating);
  EXPECT_THAT(r.error, HasSubstr("praise"));

  SubprocessScorer crash("exit 1", 5000ms);
  r = score_soundness(record("x"), s, crash);
  EXPECT_FALSE(r.praise_rating || r.error_response_rating);
  EXPECT_FALSE(r.error.empty());

  CountingScorer nulls(json{{"praise", nullptr}, {"error_response", nullptr}});
  r = score_soundness(record("x"), s, nulls);
  EXPECT_TRUE(r.error.empty());
  EXPECT_FALSE(r.praise_rating);
}
