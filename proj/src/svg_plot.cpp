#include "epg/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace epg::svg {

namespace {

constexpr double kWidth = 760.0;
constexpr double kPanelHeight = 220.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kGap = 50.0;
constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(std::abs(hi) * 0.05, 1e-9);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

void panel(std::ostream& out, const Panel& p, double top) {
  Range xr, yr;
  for (const auto& s : p.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (p.reference) yr.add(*p.reference);
  xr.finish();
  yr.finish();
  const double w = kWidth - kLeft - kRight;
  const double h = kPanelHeight;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) { return top + h - (y - yr.lo) / (yr.hi - yr.lo) * h; };

  out << "<rect x='" << kLeft << "' y='" << top << "' width='" << w << "' height='" << h
      << "' fill='none' stroke='#444'/>\n";
  out << "<text x='" << kLeft << "' y='" << top - 8 << "' font-size='13'>" << escape(p.title)
      << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    const double xv = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    out << "<text x='" << kLeft - 6 << "' y='" << py(yv) + 4
        << "' font-size='10' text-anchor='end'>" << num(yv) << "</text>\n";
    out << "<text x='" << px(xv) << "' y='" << top + h + 14
        << "' font-size='10' text-anchor='middle'>" << num(xv) << "</text>\n";
  }
  out << "<text x='" << kLeft + w / 2 << "' y='" << top + h + 28
      << "' font-size='11' text-anchor='middle'>" << escape(p.x_label) << "</text>\n";

  if (p.reference) {
    out << "<line x1='" << kLeft << "' x2='" << kLeft + w << "' y1='" << py(*p.reference)
        << "' y2='" << py(*p.reference) << "' stroke='#777' stroke-dasharray='5,4'/>\n";
    if (!p.reference_label.empty()) {
      out << "<text x='" << kLeft + w + 6 << "' y='" << py(*p.reference) + 4
          << "' font-size='10' fill='#555'>" << escape(p.reference_label) << "</text>\n";
    }
  }
  for (std::size_t i = 0; i < p.series.size(); ++i) {
    const auto& s = p.series[i];
    const char* color = kColors[i % kColors.size()];
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.4' points='";
    const std::size_t m = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < m; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      out << num(px(s.x[k])) << ',' << num(py(s.y[k])) << ' ';
    }
    out << "'/>\n";
    if (!s.label.empty()) {
      const double ly = top + 14.0 + 16.0 * static_cast<double>(i);
      out << "<line x1='" << kLeft + w + 8 << "' x2='" << kLeft + w + 26 << "' y1='" << ly - 4
          << "' y2='" << ly - 4 << "' stroke='" << color << "' stroke-width='2'/>\n";
      out << "<text x='" << kLeft + w + 30 << "' y='" << ly << "' font-size='11'>"
          << escape(s.label) << "</text>\n";
    }
  }
}

}  // namespace

void write(std::ostream& out, const std::vector<Panel>& panels, const std::string& title) {
  const double height =
      kTop + static_cast<double>(panels.size()) * (kPanelHeight + kGap) + 10.0;
  out << "<?xml version='1.0' encoding='UTF-8'?>\n"
      << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << height
      << "' font-family='sans-serif'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kWidth / 2 << "' y='22' font-size='15' text-anchor='middle'>"
      << escape(title) << "</text>\n";
  double top = kTop + 14.0;
  for (const auto& p : panels) {
    panel(out, p, top);
    top += kPanelHeight + kGap;
  }
  out << "</svg>\n";
}

}  // namespace epg::svg
