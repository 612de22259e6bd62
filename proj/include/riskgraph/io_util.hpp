#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace riskgraph {

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

}  // namespace riskgraph
