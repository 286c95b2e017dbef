#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace carleman {

/// Plain comma-separated table; cells are kept as text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

/// Formats a double with 17 significant digits so that it re-parses bit-exactly.
std::string format_double(double value);

std::string to_csv_string(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace carleman
