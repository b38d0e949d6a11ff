// tutorbench command-line entry point.
//
//   tutorbench run --config configs/mock.json
//   tutorbench stage embed --run runs/mock
//   tutorbench report --run runs/mock --format csv
//   tutorbench synth-corpus --out data/synthetic_corpus.json

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <iostream>

#include "tutorbench/pipeline.hpp"
#include "tutorbench/synthetic.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInterrupted = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace tutorbench;

  CLI::App app{"Benchmark whether LLM tutoring recommendations adapt to tutor context."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  std::size_t limit = 0;
  auto* run = app.add_subcommand("run", "Run (or resume) every stage of a run");
  run->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--limit", limit, "Stop generation after N new records (testing)")->group("");

  std::string stage_arg;
  std::string run_dir;
  auto* stage = app.add_subcommand("stage", "Run exactly one stage of an existing run");
  stage->add_option("name", stage_arg, "validate|ablate|generate|embed|test|quality|pca|report")->required();
  stage->add_option("--run", run_dir, "Run directory")->required();

  std::string format = "md";
  auto* report = app.add_subcommand("report", "Render the report of a finished run");
  report->add_option("--run", run_dir, "Run directory")->required();
  report->add_option("--format", format, "md, json or csv");

  std::string out_path;
  std::size_t n = 75;
  std::uint64_t seed = 2024;
  auto* synth = app.add_subcommand("synth-corpus", "Write a synthetic scenario corpus");
  synth->add_option("--out", out_path, "Output JSON path")->required();
  synth->add_option("--n", n, "Number of scenarios");
  synth->add_option("--seed", seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      RunOptions options;
      if (limit > 0) options.generation_limit = limit;
      const auto outcome = cmd_run(config_path, options);
      for (const auto& s : outcome.executed) {
        std::cerr << fmt::format("stage {}: {}\n", stage_name(s.stage),
                                 s.completed ? "done" : "interrupted");
      }
      if (!outcome.complete) {
        std::cerr << fmt::format("run {} interrupted; rerun to resume\n", outcome.run_dir.string());
        return kExitInterrupted;
      }
      if (outcome.executed.empty()) std::cerr << "all stages already complete\n";
      std::cout << read_text(outcome.run_dir / kReportMarkdown);
    } else if (*stage) {
      const auto s = stage_from_name(stage_arg);
      const auto outcome = cmd_stage(s, run_dir);
      std::cerr << fmt::format("stage {}: {}\n", stage_name(s), outcome.completed ? "done" : "interrupted");
      if (!outcome.completed) return kExitInterrupted;
    } else if (*report) {
      std::cout << cmd_report(run_dir, report_format_from_name(format));
    } else if (*synth) {
      save_corpus(make_synthetic_corpus(n, seed), out_path, true);
      std::cerr << fmt::format("wrote {} synthetic scenarios to {}\n", n, out_path);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
