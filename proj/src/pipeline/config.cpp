#include <fmt/format.h>

#include <algorithm>
#include <initializer_list>

#include "tutorbench/jsonl.hpp"
#include "tutorbench/pipeline.hpp"

namespace tutorbench {

namespace {

namespace fs = std::filesystem;

void check_keys(const json& obj, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("{}: expected an object", where));
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, std::string_view where, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(fmt::format("{}: '{}' has the wrong type", where, key));
  }
}

template <typename T>
T get_required(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) throw ConfigError(fmt::format("{}: '{}' missing", where, key));
  return get_or<T>(obj, key, where, T{});
}

BackendKind backend_from(const std::string& s, std::string_view where) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "openai") return BackendKind::OpenAI;
  throw ConfigError(fmt::format("{}: unknown backend '{}'", where, s));
}

std::string_view backend_name(BackendKind k) { return k == BackendKind::Mock ? "mock" : "openai"; }

RetryPolicy parse_retry(const json& j, std::string_view where) {
  check_keys(j, where, {"max_attempts", "backoff_ms", "multiplier"});
  RetryPolicy r;
  r.max_attempts = get_or(j, "max_attempts", where, r.max_attempts);
  r.backoff = std::chrono::milliseconds(get_or<long>(j, "backoff_ms", where, r.backoff.count()));
  r.multiplier = get_or(j, "multiplier", where, r.multiplier);
  return r;
}

json retry_json(const RetryPolicy& r) {
  return {{"max_attempts", r.max_attempts},
          {"backoff_ms", r.backoff.count()},
          {"multiplier", r.multiplier}};
}

ContextComponent component_from(const std::string& name, std::string_view where) {
  const auto c = component_from_placeholder(name);
  if (!c) throw ConfigError(fmt::format("{}: unknown component '{}'", where, name));
  return *c;
}

MockChatOptions parse_mock(const json& j, std::string_view where) {
  check_keys(j, where,
             {"style", "sensitive_to", "markers", "anchor", "drop_delimiter_rate",
              "drop_intention_rate", "single_recommendation_rate", "extra_recommendation_rate",
              "failure_rate"});
  MockChatOptions o;
  o.style = get_or<std::string>(j, "style", where, "");
  for (const auto& name : get_or<std::vector<std::string>>(j, "sensitive_to", where, {})) {
    o.sensitive_to.push_back(component_from(name, where));
  }
  if (j.contains("markers")) {
    for (const auto& [name, marker] :
         get_or<std::map<std::string, std::string>>(j, "markers", where, {})) {
      o.markers[component_from(name, where)] = marker;
    }
  }
  o.anchor = get_or(j, "anchor", where, o.anchor);
  o.drop_delimiter_rate = get_or(j, "drop_delimiter_rate", where, 0.0);
  o.drop_intention_rate = get_or(j, "drop_intention_rate", where, 0.0);
  o.single_recommendation_rate = get_or(j, "single_recommendation_rate", where, 0.0);
  o.extra_recommendation_rate = get_or(j, "extra_recommendation_rate", where, 0.0);
  o.failure_rate = get_or(j, "failure_rate", where, 0.0);
  for (double rate : {o.drop_delimiter_rate, o.drop_intention_rate, o.single_recommendation_rate,
                      o.extra_recommendation_rate, o.failure_rate}) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError(fmt::format("{}: rates must be in [0, 1]", where));
  }
  return o;
}

json mock_json(const MockChatOptions& o) {
  json sensitive = json::array();
  for (auto c : o.sensitive_to) sensitive.push_back(placeholder_name(c));
  json markers = json::object();
  for (const auto& [c, m] : o.markers) markers[std::string(placeholder_name(c))] = m;
  return {{"style", o.style},
          {"sensitive_to", sensitive},
          {"markers", markers},
          {"anchor", o.anchor},
          {"drop_delimiter_rate", o.drop_delimiter_rate},
          {"drop_intention_rate", o.drop_intention_rate},
          {"single_recommendation_rate", o.single_recommendation_rate},
          {"extra_recommendation_rate", o.extra_recommendation_rate},
          {"failure_rate", o.failure_rate}};
}

ModelConfig parse_model(const json& j, std::size_t index) {
  const auto where = fmt::format("models[{}]", index);
  check_keys(j, where,
             {"name", "backend", "endpoint_url", "api_key_env", "temperature", "max_output_tokens",
              "timeout_ms", "retry", "mock"});
  ModelConfig m;
  m.model_name = get_required<std::string>(j, "name", where);
  m.backend = backend_from(get_or<std::string>(j, "backend", where, "mock"), where);
  m.endpoint_url = get_or<std::string>(j, "endpoint_url", where, "");
  m.api_key_env = get_or<std::string>(j, "api_key_env", where, "");
  m.temperature = get_or(j, "temperature", where, m.temperature);
  m.max_output_tokens = get_or(j, "max_output_tokens", where, m.max_output_tokens);
  m.timeout = std::chrono::milliseconds(get_or<long>(j, "timeout_ms", where, m.timeout.count()));
  if (j.contains("retry")) m.retry = parse_retry(j["retry"], where + ".retry");
  if (j.contains("mock")) m.mock = parse_mock(j["mock"], where + ".mock");
  return m;
}

EmbeddingConfig parse_embedding(const json& j) {
  constexpr std::string_view where = "embedding";
  check_keys(j, where,
             {"model", "dimension", "backend", "endpoint_url", "api_key_env", "timeout_ms", "retry"});
  EmbeddingConfig e;
  e.model_name = get_or(j, "model", where, e.model_name);
  e.dimension = get_or(j, "dimension", where, e.dimension);
  e.backend = backend_from(get_or<std::string>(j, "backend", where, "mock"), where);
  e.endpoint_url = get_or<std::string>(j, "endpoint_url", where, "");
  e.api_key_env = get_or<std::string>(j, "api_key_env", where, "");
  e.timeout = std::chrono::milliseconds(get_or<long>(j, "timeout_ms", where, e.timeout.count()));
  if (j.contains("retry")) e.retry = parse_retry(j["retry"], "embedding.retry");
  return e;
}

ScorerKind scorer_from(const std::string& s) {
  if (s == "none") return ScorerKind::None;
  if (s == "mock") return ScorerKind::Mock;
  if (s == "subprocess") return ScorerKind::Subprocess;
  if (s == "http") return ScorerKind::Http;
  throw ConfigError(fmt::format("scorer: unknown kind '{}'", s));
}

std::string_view scorer_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::None: return "none";
    case ScorerKind::Mock: return "mock";
    case ScorerKind::Subprocess: return "subprocess";
    case ScorerKind::Http: return "http";
  }
  return "none";
}

ScorerConfig parse_scorer(const json& j) {
  constexpr std::string_view where = "scorer";
  check_keys(j, where, {"kind", "command", "url", "timeout_ms", "praise_rate", "error_rate"});
  ScorerConfig s;
  s.kind = scorer_from(get_or<std::string>(j, "kind", where, "mock"));
  s.command = get_or<std::string>(j, "command", where, "");
  s.url = get_or<std::string>(j, "url", where, "");
  s.timeout = std::chrono::milliseconds(get_or<long>(j, "timeout_ms", where, s.timeout.count()));
  s.mock_praise_rate = get_or(j, "praise_rate", where, s.mock_praise_rate);
  s.mock_error_rate = get_or(j, "error_rate", where, s.mock_error_rate);
  return s;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

}  // namespace

void RunConfig::validate() const {
  if (corpus_path.empty()) throw ConfigError("corpus path missing");
  if (template_path.empty()) throw ConfigError("template path missing");
  if (models.empty()) throw ConfigError("at least one model is required");
  for (std::size_t i = 0; i < models.size(); ++i) {
    models[i].validate();
    for (std::size_t k = 0; k < i; ++k) {
      if (model_slug(models[k].model_name) == model_slug(models[i].model_name)) {
        throw ConfigError(fmt::format("duplicate model name '{}'", models[i].model_name));
      }
    }
  }
  embedding.validate();
  if (bootstrap_iterations < 1) throw ConfigError("bootstrap_iterations must be >= 1");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must be in (0, 1)");
  if (!(ellipse_n_sigma > 0.0)) throw ConfigError("pca.n_sigma must be > 0");
  if (scorer.kind == ScorerKind::Subprocess && scorer.command.empty()) {
    throw ConfigError("scorer.command required for a subprocess scorer");
  }
  if (scorer.kind == ScorerKind::Http && scorer.url.empty()) {
    throw ConfigError("scorer.url required for an http scorer");
  }
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  check_keys(doc, "config",
             {"corpus", "template", "run_dir", "models", "embedding", "bootstrap_iterations", "seed",
              "parallelism", "confidence", "scorer", "applicability", "pca"});
  RunConfig c;
  c.corpus_path = resolve(base_dir, get_required<std::string>(doc, "corpus", "config"));
  c.template_path = resolve(base_dir, get_required<std::string>(doc, "template", "config"));
  if (doc.contains("run_dir")) c.run_dir = resolve(base_dir, get_or<std::string>(doc, "run_dir", "config", ""));
  const auto& models = doc.contains("models") ? doc["models"] : json::array();
  if (!models.is_array()) throw ConfigError("config: 'models' must be an array");
  for (std::size_t i = 0; i < models.size(); ++i) c.models.push_back(parse_model(models[i], i));
  if (doc.contains("embedding")) c.embedding = parse_embedding(doc["embedding"]);
  c.bootstrap_iterations = get_or(doc, "bootstrap_iterations", "config", c.bootstrap_iterations);
  c.seed = get_or<std::uint64_t>(doc, "seed", "config", 0);
  c.parallelism = get_or(doc, "parallelism", "config", c.parallelism);
  c.confidence = get_or(doc, "confidence", "config", c.confidence);
  if (doc.contains("scorer")) c.scorer = parse_scorer(doc["scorer"]);
  if (doc.contains("applicability")) {
    const auto& a = doc["applicability"];
    check_keys(a, "applicability", {"praise_requires_correct_steps", "error_requires_incorrect_steps"});
    c.applicability.praise_requires_correct_steps =
        get_or(a, "praise_requires_correct_steps", "applicability", true);
    c.applicability.error_requires_incorrect_steps =
        get_or(a, "error_requires_incorrect_steps", "applicability", true);
  }
  if (doc.contains("pca")) {
    const auto& p = doc["pca"];
    check_keys(p, "pca", {"fit_on", "n_sigma"});
    const auto fit_on = get_or<std::string>(p, "fit_on", "pca", "all");
    if (fit_on != "all" && fit_on != "full") {
      throw ConfigError(fmt::format("pca: fit_on must be 'all' or 'full', got '{}'", fit_on));
    }
    c.pca_full_only = fit_on == "full";
    c.ellipse_n_sigma = get_or(p, "n_sigma", "pca", c.ellipse_n_sigma);
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc, fs::absolute(path).parent_path());
}

json config_to_json(const RunConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) {
    models.push_back({{"name", m.model_name},
                      {"backend", backend_name(m.backend)},
                      {"endpoint_url", m.endpoint_url},
                      {"api_key_env", m.api_key_env},
                      {"temperature", m.temperature},
                      {"max_output_tokens", m.max_output_tokens},
                      {"timeout_ms", m.timeout.count()},
                      {"retry", retry_json(m.retry)},
                      {"mock", mock_json(m.mock)}});
  }
  const auto& e = c.embedding;
  return {{"corpus", c.corpus_path.string()},
          {"template", c.template_path.string()},
          {"models", models},
          {"embedding",
           {{"model", e.model_name},
            {"dimension", e.dimension},
            {"backend", backend_name(e.backend)},
            {"endpoint_url", e.endpoint_url},
            {"api_key_env", e.api_key_env},
            {"timeout_ms", e.timeout.count()},
            {"retry", retry_json(e.retry)}}},
          {"bootstrap_iterations", c.bootstrap_iterations},
          {"seed", c.seed},
          {"parallelism", c.parallelism},
          {"confidence", c.confidence},
          {"scorer",
           {{"kind", scorer_name(c.scorer.kind)},
            {"command", c.scorer.command},
            {"url", c.scorer.url},
            {"timeout_ms", c.scorer.timeout.count()},
            {"praise_rate", c.scorer.mock_praise_rate},
            {"error_rate", c.scorer.mock_error_rate}}},
          {"applicability",
           {{"praise_requires_correct_steps", c.applicability.praise_requires_correct_steps},
            {"error_requires_incorrect_steps", c.applicability.error_requires_incorrect_steps}}},
          {"pca", {{"fit_on", c.pca_full_only ? "full" : "all"}, {"n_sigma", c.ellipse_n_sigma}}}};
}

std::unique_ptr<SoundnessScorer> make_scorer(const ScorerConfig& cfg) {
  switch (cfg.kind) {
    case ScorerKind::None: return nullptr;
    case ScorerKind::Mock: return std::make_unique<MockScorer>(cfg.mock_praise_rate, cfg.mock_error_rate);
    case ScorerKind::Subprocess: return std::make_unique<SubprocessScorer>(cfg.command, cfg.timeout);
    case ScorerKind::Http: return std::make_unique<HttpScorer>(cfg.url, cfg.timeout);
  }
  return nullptr;
}

}  // namespace tutorbench
