#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace persist {

/// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// Plain CSV with leading "# key=value" metadata lines. Fields never contain
/// commas, quotes or newlines, so no quoting is needed.
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;  // throws DataError if absent
    const std::string& at(std::size_t row, std::string_view name) const { return rows[row][column(name)]; }
    std::string meta(std::string_view key) const;      // "" if absent
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

}  // namespace persist
