#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace artai::io {

// Whole-file read; throws ValidationError naming the path when unreadable.
std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Minimal RFC 4180 reader: comma separated, double-quoted fields with "" escapes,
// LF or CRLF line endings. Blank lines are skipped. Each row keeps its 1-based
// physical line number for error reporting.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRow> parse_csv(std::string_view text);

// Non-blank lines with their 1-based line numbers (for jsonl).
std::vector<std::pair<std::size_t, std::string_view>> split_lines(std::string_view text);

}  // namespace artai::io
