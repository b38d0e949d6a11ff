#include <fmt/format.h>
#include <httplib.h>

#include "tutorbench/backends.hpp"
#include "tutorbench/http.hpp"

namespace tutorbench {

std::pair<std::string, std::string> split_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) {
    throw ConfigError(fmt::format("endpoint '{}' has no scheme", url));
  }
  const auto path = url.find('/', scheme + 3);
  if (path == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path)), std::string(url.substr(path))};
}

HttpResponse post_json(std::string_view url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout) {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) {
    throw BackendError(BackendError::Kind::Transient,
                       fmt::format("POST {} failed: {}", url, httplib::to_string(res.error())));
  }
  return {res->status, res->body};
}

void throw_for_status(const HttpResponse& r, std::string_view what) {
  const auto msg = fmt::format("{}: HTTP {}", what, r.status);
  if (r.status == 401 || r.status == 403) {
    throw BackendError(BackendError::Kind::Auth, msg, r.status);
  }
  if (r.status == 408 || r.status == 409 || r.status == 429 || r.status >= 500) {
    throw BackendError(BackendError::Kind::Transient, msg, r.status);
  }
  throw BackendError(BackendError::Kind::Permanent, msg, r.status);
}

}  // namespace tutorbench
