#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace jamrl {

/// Shortest decimal form that parses back to the same double.
std::string format_real(double x);

/// Writes `contents` to `path` via a temporary sibling and rename, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace jamrl
