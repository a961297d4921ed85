#pragma once

#include <string>
#include <vector>

#include "peersel/date.hpp"

namespace peersel {

// A parsed CSV with an ISO-8601 date first column and named numeric columns.
struct CsvTable {
    std::vector<Date> stamps;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[col][row]
};

CsvTable read_csv(const std::string& path);

std::string read_text_file(const std::string& path);

// Writes via a temp file in the same directory plus rename, so a failed run
// never leaves a partial artifact behind.
void atomic_write(const std::string& path, const std::string& content);

void ensure_directory(const std::string& path);

// Fixed round-trippable number formatting shared by every CSV writer.
std::string format_double(double v);

}  // namespace peersel
