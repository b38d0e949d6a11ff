#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace tutorbench {

using nlohmann::json;

/// Reads one JSON value per line. A final line without a trailing newline is
/// treated as an interrupted write and ignored; malformed complete lines throw.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Replaces `path` via write-temp-then-rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_jsonl_atomic(const std::filesystem::path& path, std::span<const json> records);

std::string read_text(const std::filesystem::path& path);

/// Append-only JSONL sink shared between worker threads. Each record is
/// written as a single line and flushed before append() returns. On open, a
/// partial trailing line left by a crash is cut off.
class JsonlAppender {
 public:
  explicit JsonlAppender(std::filesystem::path path);

  void append(const json& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

}  // namespace tutorbench
