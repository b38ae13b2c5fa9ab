#pragma once

#include <optional>
#include <string>
#include <vector>

#include "moodyn/dynamics.hpp"

namespace moodyn {

/// A column-oriented numeric table; empty cells are written for NaN.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

std::string table_to_csv(const Table& table);

/// Columns t, x_1..x_n, v_1..v_n, theta_1..theta_m, flags. Row k carries the
/// weights and flags of the step k -> k+1, so the last row leaves them empty.
std::string trajectory_to_csv(const Trajectory& trajectory, int n, int m);

/// Inverse of trajectory_to_csv; params are left at their defaults. Throws
/// std::runtime_error with a line number on malformed input.
Trajectory trajectory_from_csv(const std::string& text);

/// Writes text exactly (binary mode); creates parent directories.
void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// 800x600 SVG with one polyline per series and a legend. Each polyline
/// carries the exact data in a data-xy attribute ("x,y x,y ...", shortest
/// round-trip decimals). Throws std::invalid_argument for an empty series list,
/// empty or non-monotone series, and nonpositive values on a log axis.
std::string emit_svg(const std::vector<PlotSeries>& series, const Axes& axes);

/// Parses the data-xy attributes of an SVG produced by emit_svg.
std::vector<PlotSeries> parse_svg_data(const std::string& svg);

}  // namespace moodyn
