#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace scry {

std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames into place.
void atomic_write_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace scry
