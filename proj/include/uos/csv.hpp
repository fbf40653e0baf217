#pragma once

// Shared matrix file format (row-major CSV, no header) and the small table
// writer used for experiment outputs. Always '.' decimal and '\n' endings.

#include <filesystem>
#include <string>
#include <vector>

#include "uos/geometry.hpp"

namespace uos {

/// printf %g with '.' decimal; 17 digits round-trips a double.
std::string format_number(double v, int precision = 10);

Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

void write_table_csv(const std::filesystem::path& path, const Table& table);

/// Creates `dir` (and parents) if needed; IoError when it cannot be written.
void ensure_output_dir(const std::filesystem::path& dir);

}  // namespace uos
