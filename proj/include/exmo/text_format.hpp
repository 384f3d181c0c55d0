#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace exmo {

/// Shortest decimal form that round-trips to the same double, '.' separator.
std::string format_number(double v);

double parse_number(std::string_view text);

/// Splits one CSV line on commas. Quoting is not supported.
std::vector<std::string> split_csv_line(std::string_view line);

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path);

/// Writes `text` to `path` through a temporary file and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace exmo
