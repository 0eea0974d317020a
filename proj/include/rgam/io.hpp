#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rgam {

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Appends to `path`, creating it with `header_line` first when absent.
void append_line(const std::filesystem::path& path, std::string_view header_line, std::string_view line);

std::string read_file(const std::filesystem::path& path);

} // namespace rgam
