#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace flowprompt {

// Minimal RFC-4180 reader/writer: quoted fields, embedded commas/quotes/
// newlines, CRLF or LF line endings, UTF-8 passed through untouched.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_file(const std::filesystem::path& path);
void write_csv_file(const std::filesystem::path& path, const CsvTable& table);

std::string csv_escape(const std::string& field);

} // namespace flowprompt
