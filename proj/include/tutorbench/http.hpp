#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tutorbench {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_url(std::string_view url);

/// POSTs a JSON body. Connection-level failures throw
/// BackendError(Transient); HTTP statuses are returned to the caller.
HttpResponse post_json(std::string_view url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout);

/// Maps a non-2xx status to a BackendError and throws it.
[[noreturn]] void throw_for_status(const HttpResponse& r, std::string_view what);

}  // namespace tutorbench
