#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "tutorbench/backends.hpp"
#include "tutorbench/parallel.hpp"

namespace tutorbench {

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  const double scale = std::pow(multiplier, attempt - 1);
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::llround(static_cast<double>(backoff.count()) * scale)));
}

void ModelConfig::validate() const {
  if (model_name.empty()) throw ConfigError("model_name is empty");
  if (retry.max_attempts < 1) {
    throw ConfigError(fmt::format("model {}: retry.max_attempts must be >= 1", model_name));
  }
  if (!(temperature >= 0.0)) {
    throw ConfigError(fmt::format("model {}: temperature must be >= 0", model_name));
  }
  if (max_output_tokens < 1) {
    throw ConfigError(fmt::format("model {}: max_output_tokens must be >= 1", model_name));
  }
  if (backend == BackendKind::OpenAI && endpoint_url.empty()) {
    throw ConfigError(fmt::format("model {}: endpoint_url required", model_name));
  }
}

void EmbeddingConfig::validate() const {
  if (model_name.empty()) throw ConfigError("embedding model_name is empty");
  if (dimension < 1) throw ConfigError("embedding dimension must be >= 1");
  if (retry.max_attempts < 1) throw ConfigError("embedding retry.max_attempts must be >= 1");
  if (backend == BackendKind::OpenAI && endpoint_url.empty()) {
    throw ConfigError("embedding endpoint_url required");
  }
}

void real_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

int call_with_retries(const RetryPolicy& policy, const Sleeper& sleep,
                      const std::function<void()>& fn) {
  for (int attempt = 1;; ++attempt) {
    try {
      fn();
      return attempt;
    } catch (const BackendError& e) {
      if (e.kind() != BackendError::Kind::Transient || attempt >= policy.max_attempts) throw;
      sleep(policy.delay_after(attempt));
    }
  }
}

void to_json(nlohmann::json& j, const GenerationRecord& r) {
  j = nlohmann::json{{"scenario_id", r.scenario_id},
                     {"variant_key", r.variant_key},
                     {"model_name", r.model_name},
                     {"prompt_hash", r.prompt_hash},
                     {"temperature", r.temperature},
                     {"ok", r.ok},
                     {"response_text", r.response_text},
                     {"timestamp", r.timestamp},
                     {"attempt_count", r.attempt_count},
                     {"error", r.error}};
}

void from_json(const nlohmann::json& j, GenerationRecord& r) {
  j.at("scenario_id").get_to(r.scenario_id);
  j.at("variant_key").get_to(r.variant_key);
  j.at("model_name").get_to(r.model_name);
  j.at("prompt_hash").get_to(r.prompt_hash);
  j.at("temperature").get_to(r.temperature);
  j.at("ok").get_to(r.ok);
  j.at("response_text").get_to(r.response_text);
  j.at("timestamp").get_to(r.timestamp);
  j.at("attempt_count").get_to(r.attempt_count);
  j.at("error").get_to(r.error);
}

std::string GenerationStore::cache_key(std::string_view prompt_hash, double temperature) {
  return fmt::format("{}|{}", prompt_hash, temperature);
}

GenerationStore::GenerationStore(std::filesystem::path file, std::string model_name)
    : model_name_(std::move(model_name)), appender_(std::move(file)) {
  for (const auto& j : read_jsonl(appender_.path())) {
    auto rec = j.get<GenerationRecord>();
    if (rec.model_name != model_name_) {
      throw Error(fmt::format("{}: record for model '{}' in store for '{}'",
                              appender_.path().string(), rec.model_name, model_name_));
    }
    if (rec.ok) cache_.emplace(cache_key(rec.prompt_hash, rec.temperature), rec);
    by_variant_.insert_or_assign({rec.scenario_id, rec.variant_key}, std::move(rec));
  }
}

std::optional<GenerationRecord> GenerationStore::find(std::string_view scenario_id,
                                                      std::string_view variant_key) const {
  std::lock_guard lock(mu_);
  auto it = by_variant_.find({std::string(scenario_id), std::string(variant_key)});
  if (it == by_variant_.end()) return std::nullopt;
  return it->second;
}

std::optional<GenerationRecord> GenerationStore::cached(std::string_view prompt_hash,
                                                        double temperature) const {
  std::lock_guard lock(mu_);
  auto it = cache_.find(cache_key(prompt_hash, temperature));
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

void GenerationStore::put(const GenerationRecord& rec) {
  if (rec.model_name != model_name_) {
    throw Error(fmt::format("record for '{}' put into store for '{}'", rec.model_name,
                            model_name_));
  }
  std::lock_guard lock(mu_);
  if (by_variant_.contains({rec.scenario_id, rec.variant_key})) {
    throw Error(fmt::format("duplicate generation record ({}, {}, {})", rec.scenario_id,
                            rec.variant_key, rec.model_name));
  }
  appender_.append(rec);
  if (rec.ok) cache_.emplace(cache_key(rec.prompt_hash, rec.temperature), rec);
  by_variant_.emplace(std::make_pair(rec.scenario_id, rec.variant_key), rec);
}

std::vector<GenerationRecord> GenerationStore::records() const {
  std::lock_guard lock(mu_);
  std::vector<GenerationRecord> out;
  out.reserve(by_variant_.size());
  for (const auto& [_, r] : by_variant_) out.push_back(r);
  return out;
}

std::size_t GenerationStore::size() const {
  std::lock_guard lock(mu_);
  return by_variant_.size();
}

void GenerationStore::canonicalize(
    const std::function<std::size_t(const GenerationRecord&)>& rank) {
  auto recs = records();
  std::stable_sort(recs.begin(), recs.end(),
                   [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
  std::vector<nlohmann::json> lines(recs.begin(), recs.end());
  std::lock_guard lock(mu_);
  write_jsonl_atomic(appender_.path(), lines);
}

GenerationRecord generate(const RenderedPrompt& prompt, const ModelConfig& cfg,
                          ChatBackend& backend, GenerationStore& store, const Sleeper& sleep) {
  GenerationRecord rec;
  rec.scenario_id = prompt.scenario_id;
  rec.variant_key = prompt.variant_key;
  rec.model_name = cfg.model_name;
  rec.prompt_hash = prompt.prompt_hash;
  rec.temperature = cfg.temperature;

  if (auto hit = store.cached(prompt.prompt_hash, cfg.temperature)) {
    rec.ok = true;
    rec.response_text = std::move(hit->response_text);
    rec.timestamp = std::move(hit->timestamp);
    rec.attempt_count = 0;
    store.put(rec);
    return rec;
  }

  int attempts = 0;
  try {
    ChatReply reply;
    attempts = call_with_retries(cfg.retry, sleep, [&] {
      ++attempts;
      reply = backend.complete(prompt);
    });
    rec.ok = true;
    rec.response_text = std::move(reply.text);
    rec.timestamp = std::move(reply.timestamp);
  } catch (const BackendError& e) {
    if (e.kind() == BackendError::Kind::Auth) throw;
    rec.ok = false;
    rec.error = e.what();
  }
  rec.attempt_count = attempts;
  store.put(rec);
  return rec;
}

std::string model_slug(std::string_view name) {
  std::string out;
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '.' || c == '_';
    out += keep ? c : '_';
  }
  return out;
}

std::string generation_file_name(std::string_view model_name) {
  return fmt::format("generations__{}.jsonl", model_slug(model_name));
}

std::string embedding_file_name(std::string_view model_name) {
  return fmt::format("embeddings__{}.jsonl", model_slug(model_name));
}

GenerationStageResult run_generation_stage(const Corpus& corpus,
                                           const std::vector<ModelConfig>& models,
                                           const PromptTemplate& tmpl,
                                           const GenerationStageOptions& options) {
  for (const auto& m : models) m.validate();

  std::vector<RenderedPrompt> prompts;
  prompts.reserve(corpus.scenarios.size() * kVariantsPerScenario);
  for (const auto& s : corpus.scenarios) {
    for (const auto& v : generate_variants(s)) prompts.push_back(render(tmpl, effective_context(v, s)));
  }
  auto rank = [&](const GenerationRecord& r) {
    const auto removed = removed_from_key(r.variant_key);
    const std::size_t vi = removed ? static_cast<std::size_t>(*removed) + 1 : 0;
    return corpus.index_of(r.scenario_id) * kVariantsPerScenario + vi;
  };

  std::vector<std::unique_ptr<GenerationStore>> stores;
  std::vector<std::unique_ptr<ChatBackend>> backends;
  struct Task {
    std::size_t model;
    std::size_t prompt;
  };
  // Prompts that repeat an earlier prompt of the same model are deferred to a
  // sequential second pass so they are served from the cache instead of
  // racing the first request.
  std::vector<Task> tasks;
  std::vector<Task> repeats;
  for (std::size_t m = 0; m < models.size(); ++m) {
    stores.push_back(std::make_unique<GenerationStore>(
        options.out_dir / generation_file_name(models[m].model_name), models[m].model_name));
    backends.push_back(options.factory(models[m]));
    std::unordered_map<std::string, bool> seen;
    for (std::size_t p = 0; p < prompts.size(); ++p) {
      const bool first = seen.emplace(prompts[p].prompt_hash, true).second;
      if (stores[m]->find(prompts[p].scenario_id, prompts[p].variant_key)) continue;
      (first ? tasks : repeats).push_back({m, p});
    }
  }
  const std::size_t first_pass = tasks.size();
  tasks.insert(tasks.end(), repeats.begin(), repeats.end());

  std::size_t limit = tasks.size();
  GenerationStageResult result;
  if (options.stop_after && *options.stop_after < limit) {
    limit = *options.stop_after;
    result.interrupted = true;
  }

  std::atomic<std::size_t> calls{0};
  struct CountingBackend final : ChatBackend {
    ChatBackend& inner;
    std::atomic<std::size_t>& calls;
    CountingBackend(ChatBackend& b, std::atomic<std::size_t>& c) : inner(b), calls(c) {}
    ChatReply complete(const RenderedPrompt& p) override {
      ++calls;
      return inner.complete(p);
    }
  };
  auto run_task = [&](std::size_t i) {
    const auto& t = tasks[i];
    CountingBackend counted(*backends[t.model], calls);
    generate(prompts[t.prompt], models[t.model], counted, *stores[t.model], options.sleep);
  };
  bounded_parallel_for(std::min(limit, first_pass), options.parallelism, run_task);
  for (std::size_t i = first_pass; i < limit; ++i) run_task(i);
  result.attempted_now = limit;
  result.backend_calls = calls.load();

  for (auto& store : stores) {
    if (!result.interrupted) store->canonicalize(rank);
    auto recs = store->records();
    std::stable_sort(recs.begin(), recs.end(),
                     [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  return result;
}

}  // namespace tutorbench
