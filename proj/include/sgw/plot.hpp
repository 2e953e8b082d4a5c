#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sgw::plot {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_y = false;
};

/// Rectangular grid; cells[row][col], NaN cells are drawn grey.
struct Heatmap {
  std::string title;
  std::string row_label;
  std::string col_label;
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::vector<double>> cells;
};

std::string render_svg(const LineChart& chart);
std::string render_svg(const Heatmap& map);

/// Builders from the CSV files the pipeline writes. All throw ParseError on
/// malformed input.
LineChart nmse_chart(const std::filesystem::path& nmse_csv);
LineChart gsgw_chart(const std::filesystem::path& gsgw_csv);
/// One heatmap of `value` (e.g. "manova_p") over R x k for the given stratum;
/// empty bone/side selects the first stratum in the file.
Heatmap sweep_heatmap(const std::filesystem::path& sweep_csv, const std::string& value,
                      const std::string& bone = {}, const std::string& side = {});

void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace sgw::plot
