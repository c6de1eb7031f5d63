#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace acgen::util {

/// Throws Error(Io) when the file cannot be read.
std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place; creates
/// parent directories.
void write_text(const std::filesystem::path& path, const std::string& content);

/// Throws Error(Io) or Error(ParseError).
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& value, int indent = 2);

}  // namespace acgen::util
