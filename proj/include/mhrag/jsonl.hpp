#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <istream>
#include <string>
#include <string_view>

namespace mhrag::jsonl {

using Json = nlohmann::json;

/// Calls `fn(record, line_number)` for every non-blank line. Throws
/// ParseError naming `source` and the line on malformed JSON or non-object
/// records. Lines starting with '#' are comments.
void for_each_record(std::istream& in, const std::string& source,
                     const std::function<void(const Json&, std::size_t)>& fn);

/// File variant; throws MissingArtifactError when the file cannot be opened.
void for_each_record(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& fn);

/// Required string field; throws ParseError if absent or not a string.
std::string require_string(const Json& rec, std::string_view key, const std::string& source, std::size_t line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace mhrag::jsonl
