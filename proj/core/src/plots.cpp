#include "modeclust/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace modeclust::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kMargin = 60;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                    "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#d62728"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double pixel_lo = 0, pixel_hi = 1;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

Axis make_axis(double lo, double hi, bool log, double p0, double p1) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
    if (log) lo = hi / 10;
  }
  if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log, p0, p1};
}

void header(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

void frame(std::ostream& out, const Axis& ax, const Axis& ay, const std::string& xl, const std::string& yl) {
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin
      << "\" height=\"" << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = ax.log ? std::pow(10.0, std::log10(ax.lo) + i * (std::log10(ax.hi) - std::log10(ax.lo)) / 4)
                             : ax.lo + i * (ax.hi - ax.lo) / 4;
    const double fy = ay.log ? std::pow(10.0, std::log10(ay.lo) + i * (std::log10(ay.hi) - std::log10(ay.lo)) / 4)
                             : ay.lo + i * (ay.hi - ay.lo) / 4;
    out << "<text x=\"" << num(ax.map(fx)) << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(ay.map(fy) + 4) << "\" text-anchor=\"end\">"
        << tick(fy) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">" << escape(xl)
      << "</text>\n";
  out << "<text x=\"16\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kHeight / 2 << ")\">" << escape(yl) << "</text>\n";
}

}  // namespace

void line_plot(std::ostream& out, const std::string& title, const std::string& x_label,
               const std::string& y_label, std::span<const Series> series, bool log_x, bool log_y) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((log_x && !(s.x[i] > 0)) || (log_y && !(s.y[i] > 0)) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = x1 = y0 = y1 = 1.0;
  const Axis ax = make_axis(x0, x1, log_x, kMargin, kWidth - kMargin);
  const Axis ay = make_axis(y0, y1, log_y, kHeight - kMargin, kMargin);
  header(out, title);
  frame(out, ax, ay, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((log_x && !(s.x[i] > 0)) || (log_y && !(s.y[i] > 0)) || !std::isfinite(s.y[i])) continue;
      const std::string px = num(ax.map(s.x[i]));
      const std::string py = num(ay.map(s.y[i]));
      pts += px + "," + py + " ";
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"" << pts << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 4 << "\" y=\"" << kMargin + 16 + 14 * k
        << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

void scatter_plot(std::ostream& out, const std::string& title, std::span<const Point> points,
                  std::span<const int> category, std::span<const std::size_t> highlight,
                  std::span<const Point> marks) {
  require(points.size() == category.size(), "scatter_plot: length mismatch");
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto extend = [&](const Point& p) {
    require(p.size() == 2, "scatter_plot: points must be 2-d");
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  };
  for (const Point& p : points) extend(p);
  for (const Point& p : marks) extend(p);
  if (!std::isfinite(x0)) x0 = x1 = y0 = y1 = 0.0;
  const Axis ax = make_axis(x0, x1, false, kMargin, kWidth - kMargin);
  const Axis ay = make_axis(y0, y1, false, kHeight - kMargin, kMargin);
  header(out, title);
  frame(out, ax, ay, "x1", "x2");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int c = category[i];
    const char* colour = c < 0 ? "#bbbbbb" : kPalette[static_cast<std::size_t>(c) % std::size(kPalette)];
    out << "<circle cx=\"" << num(ax.map(points[i][0])) << "\" cy=\"" << num(ay.map(points[i][1]))
        << "\" r=\"2\" fill=\"" << colour << "\"/>\n";
  }
  for (std::size_t i : highlight) {
    if (i >= points.size()) continue;
    out << "<circle cx=\"" << num(ax.map(points[i][0])) << "\" cy=\"" << num(ay.map(points[i][1]))
        << "\" r=\"5\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n";
  }
  for (const Point& m : marks) {
    const double cx = ax.map(m[0]);
    const double cy = ay.map(m[1]);
    out << "<path d=\"M" << num(cx - 6) << "," << num(cy - 6) << " L" << num(cx + 6) << "," << num(cy + 6)
        << " M" << num(cx - 6) << "," << num(cy + 6) << " L" << num(cx + 6) << "," << num(cy - 6)
        << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
}

void heatmap(std::ostream& out, const std::string& title, std::span<const std::string> row_labels,
             std::span<const std::string> col_labels, std::span<const double> values) {
  const std::size_t rows = row_labels.size();
  const std::size_t cols = col_labels.size();
  require(values.size() == rows * cols, "heatmap: value count does not match labels");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  header(out, title);
  const double cw = (kWidth - 2 * kMargin) / std::max<std::size_t>(cols, 1);
  const double ch = (kHeight - 2 * kMargin) / std::max<std::size_t>(rows, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = values[r * cols + c];
      const double t = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
      const int shade = static_cast<int>(255 - 200 * t);
      const double x = kMargin + c * cw;
      const double y = kMargin + r * ch;
      out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cw) << "\" height=\""
          << num(ch) << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"white\"/>\n";
      out << "<text x=\"" << num(x + cw / 2) << "\" y=\"" << num(y + ch / 2 + 4)
          << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(v) << "</text>\n";
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(kMargin + r * ch + ch / 2 + 4)
        << "\" text-anchor=\"end\">" << escape(row_labels[r]) << "</text>\n";
  }
  for (std::size_t c = 0; c < cols; ++c) {
    out << "<text x=\"" << num(kMargin + c * cw + cw / 2) << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\">" << escape(col_labels[c]) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace modeclust::svg
