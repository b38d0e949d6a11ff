#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tutorbench/ablation.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/jsonl.hpp"
#include "tutorbench/prompt.hpp"

namespace tutorbench {

// ---------------------------------------------------------------------------
// Configuration

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{1000};
  double multiplier = 2.0;

  /// Delay slept after failed attempt `attempt` (1-based).
  std::chrono::milliseconds delay_after(int attempt) const;
};

enum class BackendKind { Mock, OpenAI };

/// Knobs for the offline chat model. The mock reads the rendered prompt text
/// only. It quotes the line starting with `anchor`. For each component in
/// `sensitive_to` it switches response mode on whether the component's marker
/// line is present, and adds a reaction phrase when that list is non-empty.
/// Components outside `sensitive_to` only perturb sampling noise.
struct MockChatOptions {
  std::string style;
  std::vector<ContextComponent> sensitive_to;
  std::map<ContextComponent, std::string> markers = default_markers();
  std::string anchor = "Current problem:";
  double drop_delimiter_rate = 0.0;
  double drop_intention_rate = 0.0;
  double single_recommendation_rate = 0.0;  // one recommendation, no '#'
  double extra_recommendation_rate = 0.0;   // four recommendations
  double failure_rate = 0.0;

  /// Section headers used by assets/prompt_template.txt.
  static std::map<ContextComponent, std::string> default_markers();
};

struct ModelConfig {
  std::string model_name;
  BackendKind backend = BackendKind::Mock;
  std::string endpoint_url;
  std::string api_key_env;
  double temperature = 1.0;
  int max_output_tokens = 512;
  RetryPolicy retry;
  std::chrono::milliseconds timeout{60000};
  MockChatOptions mock;

  void validate() const;  // throws ConfigError
};

struct EmbeddingConfig {
  std::string model_name = "text-embedding-3-large";
  int dimension = 3072;
  BackendKind backend = BackendKind::Mock;
  std::string endpoint_url;
  std::string api_key_env;
  RetryPolicy retry;
  std::chrono::milliseconds timeout{60000};

  void validate() const;
};

// ---------------------------------------------------------------------------
// Errors

class BackendError : public Error {
 public:
  enum class Kind {
    Transient,  // retried: network errors, 408/409/429, 5xx
    Auth,       // aborts the run: 401/403, missing API key
    Permanent,  // record fails without retry: other 4xx, malformed payloads
  };

  BackendError(Kind kind, const std::string& what, int status = 0)
      : Error(what), kind_(kind), status_(status) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Backends

struct ChatReply {
  std::string text;
  std::string timestamp;  // ISO-8601 UTC
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Must be safe to call from several threads at once.
  virtual ChatReply complete(const RenderedPrompt& prompt) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<float> embed(std::string_view text) = 0;
};

/// Pure function of (model_name, options, prompt). Reports a fixed epoch
/// timestamp so that mock runs are byte-reproducible.
class MockChatBackend final : public ChatBackend {
 public:
  MockChatBackend(std::string model_name, MockChatOptions options);
  ChatReply complete(const RenderedPrompt& prompt) override;

 private:
  std::string model_name_;
  MockChatOptions options_;
};

/// Hashed bag-of-words: each lowercase alphanumeric token maps to a seeded
/// Gaussian vector; the text embedding is the normalized sum. Texts sharing
/// words land close together.
class MockEmbeddingBackend final : public EmbeddingBackend {
 public:
  MockEmbeddingBackend(std::string model_name, int dimension);
  std::vector<float> embed(std::string_view text) override;

 private:
  const std::vector<double>& token_vector(const std::string& token);

  std::string model_name_;
  int dimension_;
  std::mutex mu_;
  std::unordered_map<std::string, std::vector<double>> tokens_;
};

/// JSON chat-completions wire protocol.
class OpenAIChatBackend final : public ChatBackend {
 public:
  explicit OpenAIChatBackend(ModelConfig cfg);
  ChatReply complete(const RenderedPrompt& prompt) override;

 private:
  ModelConfig cfg_;
  std::string api_key_;
};

/// JSON embeddings wire protocol.
class OpenAIEmbeddingBackend final : public EmbeddingBackend {
 public:
  explicit OpenAIEmbeddingBackend(EmbeddingConfig cfg);
  std::vector<float> embed(std::string_view text) override;

 private:
  EmbeddingConfig cfg_;
  std::string api_key_;
};

std::unique_ptr<ChatBackend> make_chat_backend(const ModelConfig& cfg);
std::unique_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& cfg);

using Sleeper = std::function<void(std::chrono::milliseconds)>;
void real_sleep(std::chrono::milliseconds d);

/// Calls fn until it succeeds, retrying BackendError::Kind::Transient up to
/// policy.max_attempts. Returns the number of attempts used; rethrows the
/// last error otherwise.
int call_with_retries(const RetryPolicy& policy, const Sleeper& sleep,
                      const std::function<void()>& fn);

// ---------------------------------------------------------------------------
// Generation

struct GenerationRecord {
  std::string scenario_id;
  std::string variant_key;
  std::string model_name;
  std::string prompt_hash;
  double temperature = 1.0;
  std::string response_text;
  std::string timestamp;
  int attempt_count = 0;  // 0 means served from cache
  bool ok = false;
  std::string error;

  bool operator==(const GenerationRecord&) const = default;
};

void to_json(nlohmann::json& j, const GenerationRecord& r);
void from_json(const nlohmann::json& j, GenerationRecord& r);

/// Per-model JSONL store of generation records, doubling as the response
/// cache keyed by (model_name, prompt_hash, temperature).
class GenerationStore {
 public:
  GenerationStore(std::filesystem::path file, std::string model_name);

  const std::string& model_name() const { return model_name_; }
  const std::filesystem::path& path() const { return appender_.path(); }

  std::optional<GenerationRecord> find(std::string_view scenario_id,
                                       std::string_view variant_key) const;
  /// First successful record for this cache key.
  std::optional<GenerationRecord> cached(std::string_view prompt_hash, double temperature) const;
  /// Appends and flushes before returning. Thread-safe.
  void put(const GenerationRecord& rec);
  std::vector<GenerationRecord> records() const;
  std::size_t size() const;

  /// Rewrites the file sorted by `rank` (lower first) via temp + rename.
  /// Call after the last put().
  void canonicalize(const std::function<std::size_t(const GenerationRecord&)>& rank);

 private:
  static std::string cache_key(std::string_view prompt_hash, double temperature);

  std::string model_name_;
  JsonlAppender appender_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, GenerationRecord> by_variant_;
  std::unordered_map<std::string, GenerationRecord> cache_;
};

/// Cache-first chat completion. On a miss, calls the backend with retries and
/// persists the record before returning. Exhausted retries and permanent
/// errors produce a failed record; authentication errors propagate.
GenerationRecord generate(const RenderedPrompt& prompt, const ModelConfig& cfg,
                          ChatBackend& backend, GenerationStore& store,
                          const Sleeper& sleep = real_sleep);

using ChatBackendFactory = std::function<std::unique_ptr<ChatBackend>(const ModelConfig&)>;

struct GenerationStageOptions {
  std::filesystem::path out_dir;
  int parallelism = 4;
  /// Stop after this many new records (simulated interruption).
  std::optional<std::size_t> stop_after;
  Sleeper sleep = real_sleep;
  ChatBackendFactory factory = make_chat_backend;
};

struct GenerationStageResult {
  std::vector<GenerationRecord> records;  // canonical order
  std::size_t attempted_now = 0;          // tasks dispatched in this call
  std::size_t backend_calls = 0;
  bool interrupted = false;
};

/// File-name-safe form of a model name: characters outside [A-Za-z0-9._-]
/// become '_'.
std::string model_slug(std::string_view model_name);
std::string generation_file_name(std::string_view model_name);
std::string embedding_file_name(std::string_view model_name);

/// Renders every (scenario, variant) prompt and generates one response per
/// model, skipping records already persisted under out_dir.
GenerationStageResult run_generation_stage(const Corpus& corpus,
                                           const std::vector<ModelConfig>& models,
                                           const PromptTemplate& tmpl,
                                           const GenerationStageOptions& options);

// ---------------------------------------------------------------------------
// Embedding

struct EmbeddingRecord {
  std::string text_hash;
  std::string embedding_model_name;
  std::vector<float> vector;
};

void to_json(nlohmann::json& j, const EmbeddingRecord& r);
void from_json(const nlohmann::json& j, EmbeddingRecord& r);

/// Content-addressed JSONL store keyed by (embedding_model_name, text_hash).
class EmbeddingCache {
 public:
  EmbeddingCache(std::filesystem::path file, int dimension);

  std::optional<EmbeddingRecord> find(std::string_view model_name,
                                      std::string_view text_hash) const;
  void put(const EmbeddingRecord& rec);
  std::size_t size() const;
  void canonicalize();

 private:
  int dimension_;
  JsonlAppender appender_;
  mutable std::mutex mu_;
  std::map<std::string, EmbeddingRecord> entries_;
};

/// Cache-first embedding with dimension and finiteness checks.
EmbeddingRecord embed(std::string_view text, const EmbeddingConfig& cfg, EmbeddingBackend& backend,
                      EmbeddingCache& cache, const Sleeper& sleep = real_sleep,
                      int* attempts = nullptr);

/// Links one generation to its embedding in the per-model embedding file.
struct EmbeddingRef {
  std::string scenario_id;
  std::string variant_key;
  std::string model_name;
  std::string text_hash;
  std::string embedding_model_name;
  bool ok = false;
  std::string error;
};

void to_json(nlohmann::json& j, const EmbeddingRef& r);
void from_json(const nlohmann::json& j, EmbeddingRef& r);

struct EmbeddingStageOptions {
  std::filesystem::path out_dir;
  int parallelism = 4;
  Sleeper sleep = real_sleep;
  std::function<std::unique_ptr<EmbeddingBackend>(const EmbeddingConfig&)> factory =
      make_embedding_backend;
};

struct EmbeddingStageResult {
  std::vector<EmbeddingRef> refs;  // same order as the input records
  std::size_t backend_calls = 0;
};

/// Embeds every successful generation. Failed generations get no reference.
EmbeddingStageResult run_embedding_stage(const std::vector<GenerationRecord>& records,
                                         const EmbeddingConfig& cfg,
                                         const EmbeddingStageOptions& options);

inline constexpr std::string_view kEmbeddingCacheFile = "embedding_cache.jsonl";

}  // namespace tutorbench
