#include <fmt/format.h>

#include <algorithm>

#include "tutorbench/hashing.hpp"
#include "tutorbench/jsonl.hpp"
#include "tutorbench/parallel.hpp"
#include "tutorbench/pipeline.hpp"

namespace tutorbench {

namespace fs = std::filesystem;

namespace {

struct RunContext {
  fs::path dir;
  RunConfig cfg;
  RunManifest manifest;
  Corpus corpus;
  PromptTemplate tmpl;
};

RunContext open_run(const fs::path& run_dir) {
  RunContext ctx;
  ctx.dir = run_dir;
  ctx.manifest = read_manifest(run_dir);
  ctx.cfg = parse_config(ctx.manifest.config, run_dir);
  ctx.cfg.run_dir = run_dir;
  if (sha256_file(ctx.cfg.corpus_path) != ctx.manifest.corpus_sha256) {
    throw PipelineError(fmt::format("corpus {} changed since the run started", ctx.cfg.corpus_path.string()));
  }
  if (sha256_file(ctx.cfg.template_path) != ctx.manifest.template_sha256) {
    throw PipelineError(
        fmt::format("template {} changed since the run started", ctx.cfg.template_path.string()));
  }
  ctx.corpus = load_corpus(ctx.cfg.corpus_path);
  ctx.tmpl = load_template(ctx.cfg.template_path);
  return ctx;
}

std::vector<GenerationRecord> load_generations(const RunContext& ctx, const ModelConfig& m) {
  const auto path = ctx.dir / generation_file_name(m.model_name);
  std::vector<GenerationRecord> out;
  if (!fs::exists(path)) return out;
  for (const auto& j : read_jsonl(path)) out.push_back(j.get<GenerationRecord>());
  return out;
}

std::vector<EmbeddingRef> load_refs(const RunContext& ctx, const ModelConfig& m) {
  std::vector<EmbeddingRef> out;
  for (const auto& j : read_jsonl(ctx.dir / embedding_file_name(m.model_name))) {
    out.push_back(j.get<EmbeddingRef>());
  }
  return out;
}

std::vector<double> vector_for(const EmbeddingCache& cache, const EmbeddingRef& ref) {
  const auto rec = cache.find(ref.embedding_model_name, ref.text_hash);
  if (!rec) {
    throw PipelineError(fmt::format("embedding {} for {}/{}/{} missing from the cache", ref.text_hash,
                                    ref.model_name, ref.scenario_id, ref.variant_key));
  }
  return {rec->vector.begin(), rec->vector.end()};
}

void stage_validate(const RunContext& ctx) {
  for (std::size_t i = 0; i < ctx.corpus.scenarios.size(); ++i) {
    const auto problems = validate_scenario(ctx.corpus.scenarios[i]);
    if (!problems.empty()) {
      throw CorpusError(fmt::format("scenario {}: {}", i, problems.front()));
    }
  }
  ctx.cfg.validate();
}

void stage_ablate(const RunContext& ctx) {
  std::vector<json> rows;
  for (const auto& s : ctx.corpus.scenarios) {
    for (const auto& v : generate_variants(s)) {
      const auto p = render(ctx.tmpl, effective_context(v, s));
      rows.push_back({{"scenario_id", p.scenario_id},
                      {"variant_key", p.variant_key},
                      {"prompt_hash", p.prompt_hash},
                      {"prompt", p.text}});
    }
  }
  write_jsonl_atomic(ctx.dir / kVariantsFile, rows);
}

bool stage_generate(const RunContext& ctx, const RunOptions& options) {
  GenerationStageOptions g;
  g.out_dir = ctx.dir;
  g.parallelism = ctx.cfg.parallelism;
  g.stop_after = options.generation_limit;
  g.sleep = options.sleep;
  g.factory = options.chat_factory;
  return !run_generation_stage(ctx.corpus, ctx.cfg.models, ctx.tmpl, g).interrupted;
}

void stage_embed(const RunContext& ctx, const RunOptions& options) {
  std::vector<GenerationRecord> records;
  for (const auto& m : ctx.cfg.models) {
    auto recs = load_generations(ctx, m);
    records.insert(records.end(), recs.begin(), recs.end());
  }
  EmbeddingStageOptions e;
  e.out_dir = ctx.dir;
  e.parallelism = ctx.cfg.parallelism;
  e.sleep = options.sleep;
  e.factory = options.embedding_factory;
  run_embedding_stage(records, ctx.cfg.embedding, e);
  // A model whose generations all failed still gets an (empty) ref file.
  for (const auto& m : ctx.cfg.models) {
    const auto path = ctx.dir / embedding_file_name(m.model_name);
    if (!fs::exists(path)) write_text_atomic(path, "");
  }
}

void stage_test(const RunContext& ctx) {
  const EmbeddingCache cache(ctx.dir / kEmbeddingCacheFile, ctx.cfg.embedding.dimension);
  std::vector<ModelEmbeddings> models;
  for (const auto& m : ctx.cfg.models) {
    std::map<std::string, std::vector<const EmbeddingRef*>> by_variant;
    const auto refs = load_refs(ctx, m);
    for (const auto& r : refs) {
      if (r.ok) by_variant[r.variant_key].push_back(&r);
    }
    ModelEmbeddings me;
    me.model_name = m.model_name;
    for (auto removed : std::array<std::optional<ContextComponent>, 6>{
             std::nullopt, kAllComponents[0], kAllComponents[1], kAllComponents[2],
             kAllComponents[3], kAllComponents[4]}) {
      const std::string key(variant_key(removed));
      const auto& rows = by_variant[key];
      EmbeddingMatrix mat;
      mat.label = fmt::format("{}/{}", m.model_name, key);
      mat.rows.resize(static_cast<Eigen::Index>(rows.size()), ctx.cfg.embedding.dimension);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto v = vector_for(cache, *rows[i]);
        mat.rows.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        mat.row_index.push_back(rows[i]->scenario_id);
      }
      me.by_variant.emplace(key, std::move(mat));
    }
    models.push_back(std::move(me));
  }

  const auto cells = run_adaptivity_tests(models, ctx.cfg.bootstrap_iterations, ctx.cfg.seed);
  json grid = json::array();
  for (const auto& cell : cells) {
    write_text_atomic(ctx.dir / adaptivity_cell_file_name(cell.model_name, cell.component),
                      cell_to_json(cell, true).dump(2) + "\n");
    grid.push_back(cell_to_json(cell));
  }
  const json doc = {{"B", ctx.cfg.bootstrap_iterations}, {"seed", ctx.cfg.seed}, {"cells", grid}};
  write_text_atomic(ctx.dir / kAdaptivityFile, doc.dump(2) + "\n");
}

void stage_quality(const RunContext& ctx, const RunOptions& options) {
  auto scorer = options.scorer_factory(ctx.cfg.scorer);
  std::vector<std::string> names;
  std::vector<QualityObservation> all;
  for (const auto& m : ctx.cfg.models) {
    names.push_back(m.model_name);
    std::vector<GenerationRecord> ok;
    for (auto& r : load_generations(ctx, m)) {
      if (r.ok) ok.push_back(std::move(r));
    }
    std::vector<QualityObservation> obs(ok.size());
    bounded_parallel_for(ok.size(), ctx.cfg.parallelism, [&](std::size_t i) {
      const auto& rec = ok[i];
      auto& o = obs[i];
      o.model_name = rec.model_name;
      o.scenario_id = rec.scenario_id;
      o.variant_key = rec.variant_key;
      o.format = check_format(parse_response(rec.response_text));
      if (scorer) {
        const auto* scenario = ctx.corpus.find(rec.scenario_id);
        if (!scenario) throw PipelineError(fmt::format("unknown scenario '{}'", rec.scenario_id));
        o.soundness = score_soundness(rec, *scenario, *scorer, ctx.cfg.applicability);
      } else {
        o.soundness.scorer_id = "none";
      }
    });
    std::vector<json> rows(obs.begin(), obs.end());
    write_jsonl_atomic(ctx.dir / quality_file_name(m.model_name), rows);
    all.insert(all.end(), obs.begin(), obs.end());
  }
  const auto table = aggregate_quality(names, all, ctx.cfg.confidence);
  write_text_atomic(ctx.dir / kQualityFile, quality_to_json(table).dump(2) + "\n");
}

void stage_pca(const RunContext& ctx) {
  const EmbeddingCache cache(ctx.dir / kEmbeddingCacheFile, ctx.cfg.embedding.dimension);
  std::vector<EmbeddingRef> refs;
  for (const auto& m : ctx.cfg.models) {
    for (auto& r : load_refs(ctx, m)) {
      if (r.ok) refs.push_back(std::move(r));
    }
  }
  if (refs.size() < 2) throw PipelineError("pca needs at least two embedded responses");
  RowMatrix x(static_cast<Eigen::Index>(refs.size()), ctx.cfg.embedding.dimension);
  std::vector<Eigen::Index> fit_rows;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto v = vector_for(cache, refs[i]);
    x.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (!ctx.cfg.pca_full_only || refs[i].variant_key == "full") {
      fit_rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  const RowMatrix fit_x = x(fit_rows, Eigen::all);
  const auto model = fit_pca(fit_x, 2);
  const RowMatrix projected = project(model, x);

  PlotBundle bundle;
  bundle.explained_variance_ratio = model.explained_variance_ratio;
  bundle.total_variance = model.total_variance;
  std::map<std::string, std::vector<Eigen::Index>> by_model;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    bundle.points.push_back({refs[i].scenario_id, refs[i].variant_key, refs[i].model_name,
                             projected(row, 0), projected(row, 1)});
    by_model[refs[i].model_name].push_back(row);
  }
  for (const auto& m : ctx.cfg.models) {
    const auto it = by_model.find(m.model_name);
    if (it == by_model.end() || it->second.size() < 3) continue;
    const RowMatrix pts = projected(it->second, Eigen::all);
    bundle.ellipses.push_back(group_ellipse(pts, m.model_name, ctx.cfg.ellipse_n_sigma));
  }
  export_plot_data(ctx.dir, bundle);
}

void require_prerequisites(const RunManifest& manifest, Stage stage) {
  for (auto p : stage_prerequisites(stage)) {
    if (!manifest.is_complete(p)) {
      throw PipelineError(fmt::format("stage '{}' requires '{}' to complete first", stage_name(stage),
                                      stage_name(p)));
    }
  }
}

bool execute(RunContext& ctx, Stage stage, const RunOptions& options) {
  switch (stage) {
    case Stage::Validate: stage_validate(ctx); return true;
    case Stage::Ablate: stage_ablate(ctx); return true;
    case Stage::Generate: return stage_generate(ctx, options);
    case Stage::Embed: stage_embed(ctx, options); return true;
    case Stage::Test: stage_test(ctx); return true;
    case Stage::Quality: stage_quality(ctx, options); return true;
    case Stage::Pca: stage_pca(ctx); return true;
    case Stage::Report: cmd_report(ctx.dir); return true;
  }
  return false;
}

// Marks `stage` and clears every stage that depends on it, directly or not.
void record_completion(RunContext& ctx, Stage stage, bool done) {
  ctx.manifest.completed[stage] = done;
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto s : kAllStages) {
      if (!ctx.manifest.is_complete(s)) continue;
      for (auto p : stage_prerequisites(s)) {
        if (!ctx.manifest.is_complete(p)) {
          ctx.manifest.completed[s] = false;
          changed = true;
          break;
        }
      }
    }
  }
  write_manifest(ctx.dir, ctx.manifest);
}

StageOutcome run_stage(RunContext& ctx, Stage stage, const RunOptions& options) {
  require_prerequisites(ctx.manifest, stage);
  // Cleared first so that a failure part-way through cannot leave a stale
  // marker behind.
  if (ctx.manifest.is_complete(stage)) record_completion(ctx, stage, false);
  const bool done = execute(ctx, stage, options);
  record_completion(ctx, stage, done);
  return {stage, done};
}

}  // namespace

std::string adaptivity_cell_file_name(std::string_view model_name, ContextComponent c) {
  return fmt::format("adaptivity__{}__{}.json", model_slug(model_name), placeholder_name(c));
}

std::string quality_file_name(std::string_view model_name) {
  return fmt::format("quality__{}.jsonl", model_slug(model_name));
}

RunOutcome cmd_run(const fs::path& config_path, const RunOptions& options) {
  const auto cfg = load_config(config_path);
  if (cfg.run_dir.empty()) throw ConfigError("config: 'run_dir' missing");
  auto fresh = make_manifest(cfg);
  fs::create_directories(cfg.run_dir);
  if (fs::exists(cfg.run_dir / kManifestFile)) {
    const auto existing = read_manifest(cfg.run_dir);
    if (!existing.same_inputs(fresh)) {
      throw PipelineError(fmt::format("{} holds run {} with different inputs (this config is run {})",
                                      cfg.run_dir.string(), existing.run_id, fresh.run_id));
    }
  } else {
    write_manifest(cfg.run_dir, fresh);
  }

  auto ctx = open_run(cfg.run_dir);
  RunOutcome out;
  out.run_dir = cfg.run_dir;
  for (auto s : kAllStages) {
    if (ctx.manifest.is_complete(s)) continue;
    const auto outcome = run_stage(ctx, s, options);
    out.executed.push_back(outcome);
    if (!outcome.completed) return out;
  }
  out.complete = true;
  return out;
}

StageOutcome cmd_stage(Stage stage, const fs::path& run_dir, const RunOptions& options) {
  auto ctx = open_run(run_dir);
  return run_stage(ctx, stage, options);
}

}  // namespace tutorbench
