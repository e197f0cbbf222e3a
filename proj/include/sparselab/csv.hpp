#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sparselab/types.hpp"

namespace sparselab {

/// %.17g — shortest decimal form that round-trips any double.
std::string fmt_g17(double v);

/// %.*g with a caller-chosen number of significant digits (axis labels etc.).
std::string fmt_g(double v, int sig);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Minimal comma-separated table; none of our files need quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace sparselab
