#ifndef NNEVP_PLOT_HPP
#define NNEVP_PLOT_HPP

/**
 * @file plot.hpp
 *
 * Minimal static SVG line plots. Output depends only on the data, so two
 * runs with identical results give identical files.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace nnevp {

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool markers = false;
};

struct Plot {
  std::string title;
  std::string xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<Series> series;
  std::vector<double> vlines;  // dotted vertical markers, x units
  std::string vline_label;
};

inline Plot make_plot(std::string title, std::string xlabel, std::string ylabel) {
  Plot p;
  p.title = std::move(title);
  p.xlabel = std::move(xlabel);
  p.ylabel = std::move(ylabel);
  return p;
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[64];
  if (v != 0.0 && (std::fabs(v) < 1e-3 || std::fabs(v) >= 1e5))
    std::snprintf(buf, sizeof buf, "%.0e", v);
  else
    std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

/// Roughly five round tick positions covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0.0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::fabs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

}  // namespace detail

inline std::string render_svg(const Plot& p) {
  const double W = 640, H = 440, left = 80, right = 20, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  auto tx = [&](double v) { return p.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.logy ? std::log10(v) : v; };
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((p.logx && !(s.x[i] > 0)) || (p.logy && !(s.y[i] > 0))) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, tx(s.x[i]));
      xmax = std::max(xmax, tx(s.x[i]));
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!p.logy && ymin > 0.0) ymin = 0.0;
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymax += ypad;
  if (p.logy || ymin < 0.0) ymin -= ypad;

  auto px = [&](double v) { return left + (tx(v) - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - ymin) / (ymax - ymin) * ph; };
  using detail::fmt;

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W, "%.0f") + "\" height=\"" + fmt(H, "%.0f") +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::escape_xml(p.title) + "</text>\n";
  o += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks: in log mode at integer decades of the transformed axis
  auto ticks = [](double lo, double hi, bool log) {
    if (!log) return detail::linear_ticks(lo, hi);
    std::vector<double> t;
    for (double d = std::ceil(lo); d <= std::floor(hi); d += 1.0) t.push_back(d);
    if (t.empty()) t = detail::linear_ticks(lo, hi);
    return t;
  };
  for (double t : ticks(xmin, xmax, p.logx)) {
    const double X = left + (t - xmin) / (xmax - xmin) * pw;
    const double v = p.logx ? std::pow(10.0, t) : t;
    o += "<line x1=\"" + fmt(X) + "\" y1=\"" + fmt(top + ph) + "\" x2=\"" + fmt(X) + "\" y2=\"" + fmt(top + ph + 5) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fmt(X) + "\" y=\"" + fmt(top + ph + 18) + "\" text-anchor=\"middle\">" +
         detail::tick_label(v) + "</text>\n";
  }
  for (double t : ticks(ymin, ymax, p.logy)) {
    const double Y = top + ph - (t - ymin) / (ymax - ymin) * ph;
    const double v = p.logy ? std::pow(10.0, t) : t;
    o += "<line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(Y) + "\" x2=\"" + fmt(left) + "\" y2=\"" + fmt(Y) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(Y + 4) + "\" text-anchor=\"end\">" + detail::tick_label(v) +
         "</text>\n";
  }
  o += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(H - 15) + "\" text-anchor=\"middle\">" +
       detail::escape_xml(p.xlabel) + "</text>\n";
  o += "<text transform=\"translate(18," + fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape_xml(p.ylabel) + "</text>\n";

  for (double v : p.vlines) {
    if (p.logx && !(v > 0)) continue;
    const double X = px(v);
    o += "<line x1=\"" + fmt(X) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(X) + "\" y2=\"" + fmt(top + ph) +
         "\" stroke=\"gray\" stroke-dasharray=\"2,3\"/>\n";
    if (!p.vline_label.empty())
      o += "<text x=\"" + fmt(X + 4) + "\" y=\"" + fmt(top + 14) + "\" fill=\"gray\">" +
           detail::escape_xml(p.vline_label) + "</text>\n";
  }

  for (const auto& s : p.series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((p.logx && !(s.x[i] > 0)) || (p.logy && !(s.y[i] > 0))) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += fmt(px(s.x[i])) + "," + fmt(py(s.y[i])) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    o += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
         (s.dashed ? std::string(" stroke-dasharray=\"6,4\"") : std::string()) + " points=\"" + pts + "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if ((p.logx && !(s.x[i] > 0)) || (p.logy && !(s.y[i] > 0))) continue;
        o += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"2.5\" fill=\"" + s.color +
             "\"/>\n";
      }
  }

  // legend
  double ly = top + 16;
  for (const auto& s : p.series) {
    if (s.label.empty()) continue;
    const double lx = left + pw - 150;
    o += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" + fmt(lx + 24) + "\" y2=\"" + fmt(ly - 4) +
         "\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"" +
         (s.dashed ? std::string(" stroke-dasharray=\"6,4\"") : std::string()) + "/>\n";
    o += "<text x=\"" + fmt(lx + 30) + "\" y=\"" + fmt(ly) + "\">" + detail::escape_xml(s.label) + "</text>\n";
    ly += 16;
  }
  o += "</svg>\n";
  return o;
}

}  // namespace nnevp

#endif  // NNEVP_PLOT_HPP
