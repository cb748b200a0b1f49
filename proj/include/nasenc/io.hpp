#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace nasenc {

/// Shortest text that parses back to the same double (%.17g).
std::string format_double(double v);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace nasenc
