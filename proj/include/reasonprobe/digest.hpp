#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace reasonprobe {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's bytes. Throws std::runtime_error if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// 64-bit FNV-1a; used where a cheap, portable, non-cryptographic hash is enough.
std::uint64_t fnv1a64(std::string_view data);

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace reasonprobe
