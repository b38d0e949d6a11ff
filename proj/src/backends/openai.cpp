#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>

#include "tutorbench/backends.hpp"
#include "tutorbench/http.hpp"

namespace tutorbench {

namespace {

std::string api_key_from_env(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  if (v == nullptr || *v == '\0') {
    throw BackendError(BackendError::Kind::Auth,
                       fmt::format("environment variable {} is not set", var));
  }
  return v;
}

std::vector<std::pair<std::string, std::string>> auth_headers(const std::string& key) {
  if (key.empty()) return {};
  return {{"Authorization", "Bearer " + key}};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json parse_body(const HttpResponse& r, std::string_view what) {
  try {
    return nlohmann::json::parse(r.body);
  } catch (const nlohmann::json::parse_error&) {
    throw BackendError(BackendError::Kind::Permanent, fmt::format("{}: body is not JSON", what));
  }
}

}  // namespace

OpenAIChatBackend::OpenAIChatBackend(ModelConfig cfg)
    : cfg_(std::move(cfg)), api_key_(api_key_from_env(cfg_.api_key_env)) {}

ChatReply OpenAIChatBackend::complete(const RenderedPrompt& prompt) {
  nlohmann::json req = {
      {"model", cfg_.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text}}})},
      {"temperature", cfg_.temperature},
      {"max_tokens", cfg_.max_output_tokens}};
  const auto res = post_json(cfg_.endpoint_url, req.dump(), auth_headers(api_key_), cfg_.timeout);
  if (res.status < 200 || res.status >= 300) throw_for_status(res, "chat completion");
  const auto body = parse_body(res, "chat completion");
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    return {content.get<std::string>(), utc_now()};
  } catch (const nlohmann::json::exception&) {
    throw BackendError(BackendError::Kind::Permanent,
                       "chat completion: missing choices[0].message.content");
  }
}

OpenAIEmbeddingBackend::OpenAIEmbeddingBackend(EmbeddingConfig cfg)
    : cfg_(std::move(cfg)), api_key_(api_key_from_env(cfg_.api_key_env)) {}

std::vector<float> OpenAIEmbeddingBackend::embed(std::string_view text) {
  nlohmann::json req = {{"model", cfg_.model_name}, {"input", std::string(text)}};
  const auto res = post_json(cfg_.endpoint_url, req.dump(), auth_headers(api_key_), cfg_.timeout);
  if (res.status < 200 || res.status >= 300) throw_for_status(res, "embedding");
  const auto body = parse_body(res, "embedding");
  try {
    const auto& arr = body.at("data").at(0).at("embedding");
    std::vector<float> out;
    out.reserve(arr.size());
    for (const auto& x : arr) out.push_back(x.get<float>());
    return out;
  } catch (const nlohmann::json::exception&) {
    throw BackendError(BackendError::Kind::Permanent, "embedding: missing data[0].embedding");
  }
}

std::unique_ptr<ChatBackend> make_chat_backend(const ModelConfig& cfg) {
  if (cfg.backend == BackendKind::Mock) {
    return std::make_unique<MockChatBackend>(cfg.model_name, cfg.mock);
  }
  return std::make_unique<OpenAIChatBackend>(cfg);
}

std::unique_ptr<EmbeddingBackend> make_embedding_backend(const EmbeddingConfig& cfg) {
  if (cfg.backend == BackendKind::Mock) {
    return std::make_unique<MockEmbeddingBackend>(cfg.model_name, cfg.dimension);
  }
  return std::make_unique<OpenAIEmbeddingBackend>(cfg);
}

}  // namespace tutorbench
