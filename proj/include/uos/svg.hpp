#pragma once

// Minimal SVG line charts for the experiment CSVs. Presentation only.

#include <filesystem>
#include <string>
#include <vector>

namespace uos {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_plot(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<Series>& series, bool log_x = false);

}  // namespace uos
