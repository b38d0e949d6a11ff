#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <unordered_map>

#include "tutorbench/backends.hpp"
#include "tutorbench/hashing.hpp"
#include "tutorbench/parallel.hpp"

namespace tutorbench {

void to_json(nlohmann::json& j, const EmbeddingRecord& r) {
  j = nlohmann::json{{"text_hash", r.text_hash},
                     {"embedding_model_name", r.embedding_model_name},
                     {"vector", r.vector}};
}

void from_json(const nlohmann::json& j, EmbeddingRecord& r) {
  j.at("text_hash").get_to(r.text_hash);
  j.at("embedding_model_name").get_to(r.embedding_model_name);
  j.at("vector").get_to(r.vector);
}

void to_json(nlohmann::json& j, const EmbeddingRef& r) {
  j = nlohmann::json{{"scenario_id", r.scenario_id},
                     {"variant_key", r.variant_key},
                     {"model_name", r.model_name},
                     {"text_hash", r.text_hash},
                     {"embedding_model_name", r.embedding_model_name},
                     {"ok", r.ok},
                     {"error", r.error}};
}

void from_json(const nlohmann::json& j, EmbeddingRef& r) {
  j.at("scenario_id").get_to(r.scenario_id);
  j.at("variant_key").get_to(r.variant_key);
  j.at("model_name").get_to(r.model_name);
  j.at("text_hash").get_to(r.text_hash);
  j.at("embedding_model_name").get_to(r.embedding_model_name);
  j.at("ok").get_to(r.ok);
  j.at("error").get_to(r.error);
}

namespace {

std::string cache_key(std::string_view model, std::string_view hash) {
  return fmt::format("{}|{}", model, hash);
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path file, int dimension)
    : dimension_(dimension), appender_(std::move(file)) {
  for (const auto& j : read_jsonl(appender_.path())) {
    auto rec = j.get<EmbeddingRecord>();
    if (static_cast<int>(rec.vector.size()) != dimension_) {
      throw DimensionMismatchError(fmt::format("{}: cached vector for {} has dimension {}, expected {}",
                                               appender_.path().string(), rec.text_hash,
                                               rec.vector.size(), dimension_));
    }
    auto key = cache_key(rec.embedding_model_name, rec.text_hash);
    entries_.emplace(std::move(key), std::move(rec));
  }
}

std::optional<EmbeddingRecord> EmbeddingCache::find(std::string_view model_name,
                                                    std::string_view text_hash) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(cache_key(model_name, text_hash));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const EmbeddingRecord& rec) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.emplace(cache_key(rec.embedding_model_name, rec.text_hash), rec);
  if (inserted) appender_.append(rec);
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void EmbeddingCache::canonicalize() {
  std::lock_guard lock(mu_);
  std::vector<nlohmann::json> lines;
  lines.reserve(entries_.size());
  for (const auto& [_, rec] : entries_) lines.emplace_back(rec);
  write_jsonl_atomic(appender_.path(), lines);
}

EmbeddingRecord embed(std::string_view text, const EmbeddingConfig& cfg, EmbeddingBackend& backend,
                      EmbeddingCache& cache, const Sleeper& sleep, int* attempts) {
  if (text.empty()) throw Error("cannot embed empty text");
  const auto hash = sha256_hex(text);
  if (auto hit = cache.find(cfg.model_name, hash)) {
    if (attempts) *attempts = 0;
    return *hit;
  }
  EmbeddingRecord rec{hash, cfg.model_name, {}};
  const int used = call_with_retries(cfg.retry, sleep, [&] { rec.vector = backend.embed(text); });
  if (attempts) *attempts = used;
  if (static_cast<int>(rec.vector.size()) != cfg.dimension) {
    throw DimensionMismatchError(fmt::format("embedding model {} returned dimension {}, expected {}",
                                             cfg.model_name, rec.vector.size(), cfg.dimension));
  }
  for (float x : rec.vector) {
    if (!std::isfinite(x)) throw Error("embedding contains non-finite values");
  }
  cache.put(rec);
  return rec;
}

EmbeddingStageResult run_embedding_stage(const std::vector<GenerationRecord>& records,
                                         const EmbeddingConfig& cfg,
                                         const EmbeddingStageOptions& options) {
  cfg.validate();
  EmbeddingCache cache(options.out_dir / kEmbeddingCacheFile, cfg.dimension);
  auto backend = options.factory(cfg);

  struct CountingBackend final : EmbeddingBackend {
    EmbeddingBackend& inner;
    std::atomic<std::size_t> calls{0};
    explicit CountingBackend(EmbeddingBackend& b) : inner(b) {}
    std::vector<float> embed(std::string_view t) override {
      ++calls;
      return inner.embed(t);
    }
  } counted(*backend);

  // Unique texts first so concurrent workers never embed the same text twice.
  std::vector<const std::string*> texts;
  std::unordered_map<std::string, std::size_t> text_index;
  for (const auto& r : records) {
    if (!r.ok || r.response_text.empty()) continue;
    if (text_index.emplace(r.response_text, texts.size()).second) texts.push_back(&r.response_text);
  }
  std::vector<std::string> errors(texts.size());
  bounded_parallel_for(texts.size(), options.parallelism, [&](std::size_t i) {
    try {
      embed(*texts[i], cfg, counted, cache, options.sleep);
    } catch (const BackendError& e) {
      if (e.kind() == BackendError::Kind::Auth) throw;
      errors[i] = e.what();
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  cache.canonicalize();

  EmbeddingStageResult result;
  result.backend_calls = counted.calls.load();
  std::map<std::string, std::vector<nlohmann::json>> per_model;
  std::vector<std::string> model_order;
  for (const auto& r : records) {
    if (!per_model.contains(r.model_name)) {
      per_model[r.model_name];
      model_order.push_back(r.model_name);
    }
    if (!r.ok) continue;
    EmbeddingRef ref{r.scenario_id, r.variant_key, r.model_name, {}, cfg.model_name, false, {}};
    if (r.response_text.empty()) {
      ref.error = "empty response text";
    } else {
      ref.text_hash = sha256_hex(r.response_text);
      const auto& err = errors[text_index.at(r.response_text)];
      ref.ok = err.empty();
      ref.error = err;
    }
    per_model[r.model_name].emplace_back(ref);
    result.refs.push_back(std::move(ref));
  }
  for (const auto& m : model_order) {
    write_jsonl_atomic(options.out_dir / embedding_file_name(m), per_model[m]);
  }
  return result;
}

}  // namespace tutorbench
