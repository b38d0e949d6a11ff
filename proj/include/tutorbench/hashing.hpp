#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tutorbench {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes. Throws Error if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit FNV-1a. Stable across platforms; used for seeds and mock backends.
std::uint64_t fnv1a64(std::string_view data);

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace tutorbench
