#pragma once

// Minimal standalone SVG 1.1 line charts: linear axes, ticks, legend and an
// optional vertical reference line. Output bytes depend only on the input.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nmerci/error.hpp"

namespace nmerci::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartMeta {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::optional<double> reference_x;
  double width = 720.0;
  double height = 460.0;
};

// Plot area in pixels and the affine data-to-pixel map.
class Frame {
 public:
  static constexpr double kLeft = 70.0;
  static constexpr double kRight = 190.0;  // room for the legend
  static constexpr double kTop = 40.0;
  static constexpr double kBottom = 55.0;

  Frame(const ChartMeta& meta, double x_min, double x_max, double y_min, double y_max)
      : left_(kLeft),
        right_(meta.width - kRight),
        top_(kTop),
        bottom_(meta.height - kBottom),
        x_min_(x_min),
        x_max_(x_max),
        y_min_(y_min),
        y_max_(y_max) {}

  [[nodiscard]] double px(double x) const { return left_ + (x - x_min_) / (x_max_ - x_min_) * (right_ - left_); }
  [[nodiscard]] double py(double y) const { return bottom_ - (y - y_min_) / (y_max_ - y_min_) * (bottom_ - top_); }

  [[nodiscard]] double left() const { return left_; }
  [[nodiscard]] double right() const { return right_; }
  [[nodiscard]] double top() const { return top_; }
  [[nodiscard]] double bottom() const { return bottom_; }
  [[nodiscard]] double x_min() const { return x_min_; }
  [[nodiscard]] double x_max() const { return x_max_; }
  [[nodiscard]] double y_min() const { return y_min_; }
  [[nodiscard]] double y_max() const { return y_max_; }

 private:
  double left_, right_, top_, bottom_;
  double x_min_, x_max_, y_min_, y_max_;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};

}  // namespace detail

// Frame spanning the data range exactly; a flat range is widened by 1 on
// each side.
inline Frame frame_for(std::span<const Series> series, const ChartMeta& meta) {
  double x_min = INFINITY, x_max = -INFINITY, y_min = INFINITY, y_max = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x_min = std::min(x_min, v), x_max = std::max(x_max, v);
    for (double v : s.y) y_min = std::min(y_min, v), y_max = std::max(y_max, v);
  }
  if (meta.reference_x) x_min = std::min(x_min, *meta.reference_x), x_max = std::max(x_max, *meta.reference_x);
  if (x_min == x_max) x_min -= 1.0, x_max += 1.0;
  if (y_min == y_max) y_min -= 1.0, y_max += 1.0;
  return Frame(meta, x_min, x_max, y_min, y_max);
}

inline std::string emit_svg_lines(std::span<const Series> series, const ChartMeta& meta) {
  if (series.empty()) throw Error("chart needs at least one series");
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw Error("series '" + s.label + "' has mismatched x/y lengths");
    if (s.x.size() < 2) throw Error("series '" + s.label + "' needs at least 2 points");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        throw Error("series '" + s.label + "' has a non-finite point");
      }
    }
  }
  const Frame f = frame_for(series, meta);
  using detail::num;

  std::ostringstream out;
  out << R"(<?xml version="1.0" encoding="UTF-8" standalone="no"?>)" << '\n'
      << R"(<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width=")" << num(meta.width)
      << R"(" height=")" << num(meta.height) << R"(" viewBox="0 0 )" << num(meta.width) << ' '
      << num(meta.height) << R"(" font-family="sans-serif" font-size="12">)" << '\n'
      << R"(<rect x="0" y="0" width=")" << num(meta.width) << R"(" height=")" << num(meta.height)
      << R"(" fill="white"/>)" << '\n';

  if (!meta.title.empty()) {
    out << R"(<text x=")" << num((f.left() + f.right()) / 2) << R"(" y="22" text-anchor="middle" font-size="14">)"
        << detail::escape(meta.title) << "</text>\n";
  }

  // Axes and ticks.
  out << R"(<g stroke="black" stroke-width="1" fill="none">)" << '\n'
      << R"(<line x1=")" << num(f.left()) << R"(" y1=")" << num(f.bottom()) << R"(" x2=")" << num(f.right())
      << R"(" y2=")" << num(f.bottom()) << R"("/>)" << '\n'
      << R"(<line x1=")" << num(f.left()) << R"(" y1=")" << num(f.bottom()) << R"(" x2=")" << num(f.left())
      << R"(" y2=")" << num(f.top()) << R"("/>)" << '\n'
      << "</g>\n";
  constexpr int kTicks = 5;
  out << R"(<g fill="black">)" << '\n';
  for (int t = 0; t <= kTicks; ++t) {
    const double xv = f.x_min() + (f.x_max() - f.x_min()) * t / kTicks;
    const double yv = f.y_min() + (f.y_max() - f.y_min()) * t / kTicks;
    out << R"(<line x1=")" << num(f.px(xv)) << R"(" y1=")" << num(f.bottom()) << R"(" x2=")" << num(f.px(xv))
        << R"(" y2=")" << num(f.bottom() + 5) << R"(" stroke="black"/>)" << '\n'
        << R"(<text x=")" << num(f.px(xv)) << R"(" y=")" << num(f.bottom() + 18)
        << R"(" text-anchor="middle">)" << detail::tick(xv) << "</text>\n"
        << R"(<line x1=")" << num(f.left() - 5) << R"(" y1=")" << num(f.py(yv)) << R"(" x2=")" << num(f.left())
        << R"(" y2=")" << num(f.py(yv)) << R"(" stroke="black"/>)" << '\n'
        << R"(<text x=")" << num(f.left() - 8) << R"(" y=")" << num(f.py(yv) + 4)
        << R"(" text-anchor="end">)" << detail::tick(yv) << "</text>\n";
  }
  out << R"(<text x=")" << num((f.left() + f.right()) / 2) << R"(" y=")" << num(meta.height - 12)
      << R"(" text-anchor="middle">)" << detail::escape(meta.x_label) << "</text>\n"
      << R"(<text x="16" y=")" << num((f.top() + f.bottom()) / 2) << R"(" text-anchor="middle" transform="rotate(-90 16 )"
      << num((f.top() + f.bottom()) / 2) << R"lit()">)lit" << detail::escape(meta.y_label) << "</text>\n"
      << "</g>\n";

  if (meta.reference_x) {
    out << R"(<line class="reference" x1=")" << num(f.px(*meta.reference_x)) << R"(" y1=")" << num(f.top())
        << R"(" x2=")" << num(f.px(*meta.reference_x)) << R"(" y2=")" << num(f.bottom())
        << R"(" stroke="red" stroke-width="1.5"/>)" << '\n';
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = detail::kPalette[k % std::size(detail::kPalette)];
    out << R"(<polyline fill="none" stroke=")" << color << R"(" stroke-width="2" points=")";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0) out << ' ';
      out << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i]));
    }
    out << R"("/>)" << '\n';
    const double ly = f.top() + 10 + 20.0 * static_cast<double>(k);
    out << R"(<line x1=")" << num(f.right() + 15) << R"(" y1=")" << num(ly) << R"(" x2=")" << num(f.right() + 40)
        << R"(" y2=")" << num(ly) << R"(" stroke=")" << color << R"(" stroke-width="2"/>)" << '\n'
        << R"(<text x=")" << num(f.right() + 46) << R"(" y=")" << num(ly + 4) << R"(">)"
        << detail::escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace nmerci::svg
