#include "sparselab/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sparselab/csv.hpp"

namespace sparselab {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 520;
constexpr int kLeft = 70, kRight = 230, kTop = 50, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                          "#bcbd22", "#17becf"};
constexpr int kPaletteSize = 10;

struct Scale {
  double lo = 0, hi = 1;
  bool log = false;
  double px0 = 0, px1 = 1;
  double map(double v) const {
    double t;
    if (log) {
      t = (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    } else {
      t = (v - lo) / (hi - lo);
    }
    return px0 + t * (px1 - px0);
  }
};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> linear_ticks(double lo, double hi, int target) {
  std::vector<double> ticks;
  const double span = hi - lo;
  if (span <= 0) return {lo};
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  const double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + 1e-9 * span; v += step) ticks.push_back(v);
  return ticks;
}

std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const int e0 = static_cast<int>(std::floor(std::log10(lo)));
  const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
  for (int e = e0; e <= e1; ++e) {
    const double v = std::pow(10.0, e);
    if (v >= lo * (1 - 1e-12) && v <= hi * (1 + 1e-12)) ticks.push_back(v);
  }
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

}  // namespace

void write_svg_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                          const std::vector<ChartSeries>& series) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    for (double v : s.x) {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
    for (double v : s.y_lo) y_lo = std::min(y_lo, v);
    for (double v : s.y_hi) y_hi = std::max(y_hi, v);
  }
  if (!std::isfinite(x_lo)) {
    x_lo = 0;
    x_hi = 1;
  }
  if (!std::isfinite(y_lo)) {
    y_lo = 0;
    y_hi = 1;
  }
  if (spec.clamp_unit_y) {
    y_lo = 0;
    y_hi = 1;
  } else {
    const double pad = (y_hi - y_lo) * 0.05 + 1e-12;
    y_lo -= pad;
    y_hi += pad;
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  if (spec.log_x && x_lo <= 0) throw std::invalid_argument("log x-axis needs positive x");

  Scale xs{x_lo, x_hi, spec.log_x, static_cast<double>(kLeft),
           static_cast<double>(kWidth - kRight)};
  Scale ys{y_lo, y_hi, false, static_cast<double>(kHeight - kBottom),
           static_cast<double>(kTop)};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"28\" font-family=\"sans-serif\" "
         "font-size=\"16\" font-weight=\"bold\">"
      << esc(spec.title) << "</text>\n";

  // Axes.
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
      << kWidth - kRight << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";

  const auto xticks = spec.log_x ? log_ticks(x_lo, x_hi) : linear_ticks(x_lo, x_hi, 6);
  for (double t : xticks) {
    const double px = xs.map(t);
    out << "<line x1=\"" << fmt_g(px, 6) << "\" y1=\"" << kHeight - kBottom
        << "\" x2=\"" << fmt_g(px, 6) << "\" y2=\"" << kHeight - kBottom + 5
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt_g(px, 6) << "\" y=\"" << kHeight - kBottom + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << fmt_g(t, 4) << "</text>\n";
  }
  for (double t : linear_ticks(y_lo, y_hi, 6)) {
    const double py = ys.map(t);
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt_g(py, 6) << "\" x2=\""
        << kWidth - kRight << "\" y2=\"" << fmt_g(py, 6)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt_g(py + 4, 6)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << fmt_g(t, 4) << "</text>\n";
  }

  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\""
      << kHeight - 18
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      << esc(spec.x_label) << "</text>\n";
  out << "<text x=\"20\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 "
      << (kTop + kHeight - kBottom) / 2 << ")\">" << esc(spec.y_label)
      << "</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % kPaletteSize];
    if (s.y_lo.size() == s.x.size() && s.y_hi.size() == s.x.size() && !s.x.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" "
             "stroke=\"none\" points=\"";
      for (size_t j = 0; j < s.x.size(); ++j)
        out << fmt_g(xs.map(s.x[j]), 6) << ',' << fmt_g(ys.map(s.y_hi[j]), 6) << ' ';
      for (size_t j = s.x.size(); j-- > 0;)
        out << fmt_g(xs.map(s.x[j]), 6) << ',' << fmt_g(ys.map(s.y_lo[j]), 6) << ' ';
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (size_t j = 0; j < s.x.size(); ++j)
      out << fmt_g(xs.map(s.x[j]), 6) << ',' << fmt_g(ys.map(s.y[j]), 6) << ' ';
    out << "\"/>\n";
    for (size_t j = 0; j < s.x.size(); ++j)
      out << "<circle cx=\"" << fmt_g(xs.map(s.x[j]), 6) << "\" cy=\""
          << fmt_g(ys.map(s.y[j]), 6) << "\" r=\"3\" fill=\"" << color << "\"/>\n";

    const double ly = kTop + 18.0 * static_cast<double>(i);
    out << "<line x1=\"" << kWidth - kRight + 14 << "\" y1=\"" << fmt_g(ly, 6)
        << "\" x2=\"" << kWidth - kRight + 38 << "\" y2=\"" << fmt_g(ly, 6)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kRight + 44 << "\" y=\"" << fmt_g(ly + 4, 6)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << esc(s.label)
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace sparselab
