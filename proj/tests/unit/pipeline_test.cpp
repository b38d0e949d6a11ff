#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <set>

#include "test_support.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/pipeline.hpp"
#include "tutorbench/synthetic.hpp"

using namespace tutorbench;
using tutorbench::testing::mock_config;
using tutorbench::testing::TempDir;
using tutorbench::testing::write_config;
using ::testing::HasSubstr;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kScenarios = 30;

fs::path write_corpus(const TempDir& dir, std::size_t n = kScenarios) {
  const auto path = dir / "corpus.json";
  save_corpus(make_synthetic_corpus(n, 99), path, true);
  return path;
}

// One complete run shared by the read-only tests below.
class CompletedRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    const auto corpus = write_corpus(*dir_);
    config_ = write_config(*dir_ / "config.json", mock_config(corpus, *dir_ / "run"));
    outcome_ = new RunOutcome(cmd_run(config_));
  }
  static void TearDownTestSuite() {
    delete outcome_;
    delete dir_;
  }
  static fs::path run_dir() { return *dir_ / "run"; }

  static inline TempDir* dir_ = nullptr;
  static inline fs::path config_;
  static inline RunOutcome* outcome_ = nullptr;
};

int run_cli(const std::string& args) {
  const auto cmd = tutorbench::testing::cli_path().string() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, RejectsBadValues) {
  TempDir dir;
  const auto corpus = write_corpus(dir, 3);
  auto cfg = mock_config(corpus, dir / "run");
  cfg["bootstrap_iterations"] = 0;
  EXPECT_THROW(parse_config(cfg, dir.path()), ConfigError);

  cfg = mock_config(corpus, dir / "run");
  cfg["bogus"] = 1;
  try {
    parse_config(cfg, dir.path());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_THAT(e.what(), HasSubstr("bogus"));
  }

  cfg = mock_config(corpus, dir / "run");
  cfg["models"][0]["backend"] = "carrier-pigeon";
  EXPECT_THROW(parse_config(cfg, dir.path()), ConfigError);

  cfg = mock_config(corpus, dir / "run");
  cfg["models"][1]["name"] = cfg["models"][0]["name"];
  EXPECT_THROW(parse_config(cfg, dir.path()), ConfigError);

  cfg = mock_config(corpus, dir / "run");
  cfg["scorer"] = {{"kind", "subprocess"}};
  EXPECT_THROW(parse_config(cfg, dir.path()), ConfigError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  TempDir dir;
  write_corpus(dir, 3);
  auto cfg = mock_config("corpus.json", "out/run");
  fs::create_directories(dir / "cfg");
  cfg["corpus"] = "../corpus.json";
  cfg["run_dir"] = "../out/run";
  const auto path = write_config(dir / "cfg" / "c.json", cfg);
  const auto parsed = load_config(path);
  EXPECT_EQ(fs::weakly_canonical(parsed.corpus_path), fs::weakly_canonical(dir / "corpus.json"));
  EXPECT_EQ(fs::weakly_canonical(parsed.run_dir), fs::weakly_canonical(dir / "out" / "run"));
}

TEST(Stages, NamesAndPrerequisites) {
  for (auto s : kAllStages) EXPECT_EQ(stage_from_name(stage_name(s)), s);
  EXPECT_THROW(stage_from_name("deploy"), UsageError);
  EXPECT_TRUE(stage_prerequisites(Stage::Validate).empty());
  EXPECT_EQ(stage_prerequisites(Stage::Quality), std::vector<Stage>{Stage::Generate});
  EXPECT_EQ(stage_prerequisites(Stage::Report),
            (std::vector<Stage>{Stage::Test, Stage::Quality, Stage::Pca}));
}

TEST_F(CompletedRun, ProducesEveryArtifactWithExpectedCardinality) {
  ASSERT_TRUE(outcome_->complete);
  EXPECT_EQ(outcome_->executed.size(), kAllStages.size());
  const auto variants = read_jsonl(run_dir() / kVariantsFile);
  EXPECT_EQ(variants.size(), kScenarios * kVariantsPerScenario);
  for (const char* m : {"mock-a", "mock-b", "mock-c"}) {
    EXPECT_EQ(read_jsonl(run_dir() / generation_file_name(m)).size(), kScenarios * 6);
    EXPECT_EQ(read_jsonl(run_dir() / embedding_file_name(m)).size(), kScenarios * 6);
    for (auto c : kAllComponents) EXPECT_TRUE(fs::exists(run_dir() / adaptivity_cell_file_name(m, c)));
  }
  const auto grid = nlohmann::json::parse(read_text(run_dir() / kAdaptivityFile));
  EXPECT_EQ(grid["cells"].size(), 15u);
  const auto quality = quality_from_json(nlohmann::json::parse(read_text(run_dir() / kQualityFile)));
  ASSERT_EQ(quality.size(), 3u);
  for (const auto& q : quality) EXPECT_EQ(q.rows.size(), 5u);
  for (const char* f : {"report.md", "report.json", "report.csv", "failures.jsonl", "pca_points.csv",
                        "pca_plot.json"}) {
    EXPECT_TRUE(fs::exists(run_dir() / f)) << f;
  }
}

TEST_F(CompletedRun, OnlyTheSensitiveComponentIsSignificant) {
  const auto bundle = load_report_bundle(run_dir());
  ASSERT_EQ(bundle.adaptivity.size(), 15u);
  for (const auto& cell : bundle.adaptivity) {
    const bool sensitive =
        cell.model_name == "mock-b" && cell.component == ContextComponent::IncorrectSteps;
    if (sensitive) {
      EXPECT_LT(cell.result.p_value, 0.05);
      EXPECT_GT(cell.result.effect_size_d.value_or(0), 0.0);
    } else {
      EXPECT_GT(cell.result.p_value, 0.05) << cell.model_name << " " << placeholder_name(cell.component);
    }
    EXPECT_EQ(cell.result.bootstrap.size(), 200u);
  }
}

TEST_F(CompletedRun, RerunExecutesNothingAndKeepsReport) {
  const auto before = read_text(run_dir() / kReportMarkdown);
  const auto again = cmd_run(config_);
  EXPECT_TRUE(again.complete);
  EXPECT_TRUE(again.executed.empty());
  EXPECT_EQ(read_text(run_dir() / kReportMarkdown), before);
}

TEST_F(CompletedRun, SingleStageRerunsAndReportFormats) {
  const auto before = read_text(run_dir() / kAdaptivityFile);
  EXPECT_TRUE(cmd_stage(Stage::Test, run_dir()).completed);
  EXPECT_EQ(read_text(run_dir() / kAdaptivityFile), before);
  EXPECT_EQ(cmd_report(run_dir(), ReportFormat::Markdown), read_text(run_dir() / kReportMarkdown));
  EXPECT_EQ(cmd_report(run_dir(), ReportFormat::Csv), read_text(run_dir() / kReportCsv));
  EXPECT_THROW(report_format_from_name("pdf"), UsageError);
  EXPECT_EQ(report_format_from_name("json"), ReportFormat::Json);
}

TEST_F(CompletedRun, DifferentInputsInSameRunDirAreRejected) {
  auto cfg = nlohmann::json::parse(read_text(config_));
  cfg["seed"] = 8;
  const auto other = write_config(*dir_ / "other.json", cfg);
  EXPECT_THROW(cmd_run(other), PipelineError);
}

TEST_F(CompletedRun, CliExitCodes) {
  EXPECT_EQ(run_cli("run --config " + config_.string()), 0);
  EXPECT_EQ(run_cli("report --run " + run_dir().string() + " --format csv"), 0);
  EXPECT_EQ(run_cli("report --run " + run_dir().string() + " --format pdf"), 2);
  EXPECT_EQ(run_cli("stage deploy --run " + run_dir().string()), 2);
  EXPECT_EQ(run_cli("stage test --run " + (*dir_ / "nowhere").string()), 1);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("run --config " + (*dir_ / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Pipeline, StageOrderIsEnforced) {
  TempDir dir;
  const auto corpus = write_corpus(dir, 4);
  const auto config = write_config(dir / "config.json", mock_config(corpus, dir / "run"));
  RunOptions opts;
  opts.generation_limit = 1;
  EXPECT_FALSE(cmd_run(config, opts).complete);
  EXPECT_THROW(cmd_stage(Stage::Embed, dir / "run"), PipelineError);
  EXPECT_THROW(cmd_stage(Stage::Report, dir / "run"), PipelineError);
  EXPECT_THROW(load_report_bundle(dir / "run"), PipelineError);
  EXPECT_TRUE(cmd_stage(Stage::Generate, dir / "run").completed);
  EXPECT_TRUE(cmd_stage(Stage::Embed, dir / "run").completed);
  EXPECT_TRUE(cmd_stage(Stage::Test, dir / "run").completed);
  EXPECT_TRUE(read_manifest(dir / "run").is_complete(Stage::Test));
}

TEST(Pipeline, InterruptedRunResumesToTheSameReport) {
  TempDir dir;
  const auto corpus = write_corpus(dir, 10);
  const auto fresh = write_config(dir / "fresh.json", mock_config(corpus, dir / "fresh"));
  const auto resumed = write_config(dir / "resumed.json", mock_config(corpus, dir / "resumed"));
  ASSERT_TRUE(cmd_run(fresh).complete);

  RunOptions opts;
  for (std::size_t limit : {7, 50}) {
    opts.generation_limit = limit;
    const auto partial = cmd_run(resumed, opts);
    EXPECT_FALSE(partial.complete);
    EXPECT_FALSE(partial.executed.back().completed);
  }
  ASSERT_TRUE(cmd_run(resumed).complete);

  for (const char* f : {"report.md", "report.json", "report.csv", "adaptivity.json", "quality.json"}) {
    EXPECT_EQ(read_text(dir / "resumed" / f), read_text(dir / "fresh" / f)) << f;
  }
  for (const char* m : {"mock-a", "mock-b", "mock-c"}) {
    std::set<std::string> keys;
    const auto recs = read_jsonl(dir / "resumed" / generation_file_name(m));
    for (const auto& r : recs) keys.insert(r.at("scenario_id").get<std::string>() + "/" +
                                           r.at("variant_key").get<std::string>());
    EXPECT_EQ(keys.size(), recs.size());
    EXPECT_EQ(recs.size(), 60u);
    EXPECT_EQ(read_text(dir / "resumed" / generation_file_name(m)),
              read_text(dir / "fresh" / generation_file_name(m)));
  }
}

TEST(Pipeline, FailuresReconcileWithCounts) {
  TempDir dir;
  const auto corpus = write_corpus(dir, 10);
  auto cfg = mock_config(corpus, dir / "run");
  cfg["models"][2]["mock"]["failure_rate"] = 0.2;
  const auto config = write_config(dir / "config.json", cfg);
  ASSERT_TRUE(cmd_run(config).complete);
  const auto bundle = load_report_bundle(dir / "run");
  std::size_t failed = 0;
  for (const auto& c : bundle.counts) {
    EXPECT_EQ(c.attempted, 60u);
    EXPECT_EQ(c.attempted, c.succeeded + c.failed);
    EXPECT_EQ(c.embedded, c.succeeded);
    failed += c.failed;
  }
  EXPECT_GT(bundle.counts[2].failed, 0u);
  EXPECT_EQ(bundle.counts[0].failed, 0u);
  const auto logged = read_jsonl(dir / "run" / kFailuresFile);
  std::size_t generation_failures = 0;
  for (const auto& f : logged) generation_failures += f.at("stage") == "generate";
  EXPECT_EQ(generation_failures, failed);
  // Quality denominators exclude failed generations.
  EXPECT_EQ(bundle.quality[2].rows[2].denominator, static_cast<int>(bundle.counts[2].succeeded));
}
