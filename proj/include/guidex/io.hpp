#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace guidex {

/// Whole-file read; throws Error when the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes `content` verbatim, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

}  // namespace guidex
