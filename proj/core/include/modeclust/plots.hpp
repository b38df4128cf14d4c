#pragma once

#include "modeclust/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace modeclust::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with markers. `log_x` / `log_y` switch the axes to log scale.
void line_plot(std::ostream& out, const std::string& title, const std::string& x_label,
               const std::string& y_label, std::span<const Series> series, bool log_x = false,
               bool log_y = false);

/// 2-d scatter coloured by integer category (-1 drawn grey). Points in
/// `highlight` get a red ring; `marks` are drawn as black crosses.
void scatter_plot(std::ostream& out, const std::string& title, std::span<const Point> points,
                  std::span<const int> category, std::span<const std::size_t> highlight = {},
                  std::span<const Point> marks = {});

/// Cell (r, c) of `values` (row-major, rows x cols) drawn as a shaded square.
void heatmap(std::ostream& out, const std::string& title, std::span<const std::string> row_labels,
             std::span<const std::string> col_labels, std::span<const double> values);

}  // namespace modeclust::svg
