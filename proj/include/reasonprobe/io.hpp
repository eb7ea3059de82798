#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace reasonprobe {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Calls `fn(line_number, line)` for each line, 1-based, without the newline.
void for_each_line(std::string_view content,
                   const std::function<void(std::size_t, std::string_view)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<json>& rows);

std::string_view trim(std::string_view s);

}  // namespace reasonprobe
