#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pheno {

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

// Splits one CSV line. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

// Shortest round-trip representation; keeps CSV/JSON output byte-stable.
std::string format_double(double value);

}  // namespace pheno
