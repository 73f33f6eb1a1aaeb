#pragma once

// Log-log SVG plot of one sweep column: data points, fitted power law, a guide line at the
// predicted slope and a verdict caption. Output is a pure function of the inputs.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gapfield/sweeps.hpp"

namespace gapfield {

struct LogLogPlot {
  std::string title;
  std::string x_label, y_label;
  std::vector<double> x, y;
  double fit_exponent = 0.0, fit_intercept = 0.0;  ///< y = exp(intercept) x^exponent
  double guide_slope = 0.0;
  std::string verdict;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline std::string tick_label(double e10) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(e10)));
  return buf;
}

struct LogAxis {
  double lo, hi;  // log10 bounds
  double px0, px1;
  double map(double v) const { return px0 + (std::log10(v) - lo) / (hi - lo) * (px1 - px0); }
};

inline LogAxis log_axis(const std::vector<double>& v, double px0, double px1) {
  double lo = std::log10(*std::min_element(v.begin(), v.end()));
  double hi = std::log10(*std::max_element(v.begin(), v.end()));
  double pad = std::max(0.05 * (hi - lo), 0.1);
  return {lo - pad, hi + pad, px0, px1};
}

}  // namespace detail

inline void write_svg(std::ostream& os, const LogLogPlot& p) {
  if (p.x.size() != p.y.size() || p.x.empty()) fail(ErrorKind::InvalidUsage, "plot needs matching non-empty columns");
  for (std::size_t i = 0; i < p.x.size(); ++i)
    if (!(p.x[i] > 0.0 && p.y[i] > 0.0)) fail(ErrorKind::DomainError, "log-log plot needs positive data");
  const double W = 640, H = 480, L = 80, R = 24, T = 48, B = 64;
  auto ax = detail::log_axis(p.x, L, W - R);
  auto ay = detail::log_axis(p.y, H - B, T);
  using detail::svg_num;

  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << svg_num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << detail::svg_escape(p.title) << "</text>\n";
  os << "<defs><clipPath id=\"plot\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
     << "\" height=\"" << H - T - B << "\"/></clipPath></defs>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // decade ticks and grid
  os << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"0.5\">\n";
  for (int e = static_cast<int>(std::ceil(ax.lo)); e <= static_cast<int>(std::floor(ax.hi)); ++e) {
    double px = ax.map(std::pow(10.0, e));
    os << "<line x1=\"" << svg_num(px) << "\" y1=\"" << T << "\" x2=\"" << svg_num(px) << "\" y2=\"" << H - B
       << "\" stroke=\"#cccccc\"/>\n";
    os << "<text x=\"" << svg_num(px) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << detail::tick_label(e) << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ay.lo)); e <= static_cast<int>(std::floor(ay.hi)); ++e) {
    double py = ay.map(std::pow(10.0, e));
    os << "<line x1=\"" << L << "\" y1=\"" << svg_num(py) << "\" x2=\"" << W - R << "\" y2=\"" << svg_num(py)
       << "\" stroke=\"#cccccc\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << svg_num(py + 4) << "\" text-anchor=\"end\">" << detail::tick_label(e)
       << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << svg_num((L + W - R) / 2) << "\" y=\"" << H - 24
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << detail::svg_escape(p.x_label)
     << "</text>\n";
  os << "<text x=\"20\" y=\"" << svg_num((T + H - B) / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"13\" transform=\"rotate(-90 20 " << svg_num((T + H - B) / 2) << ")\">"
     << detail::svg_escape(p.y_label) << "</text>\n";

  // lines through the full x range; the guide passes through the data's log-centroid
  double xl = std::pow(10.0, ax.lo), xh = std::pow(10.0, ax.hi);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    mx += std::log(p.x[i]);
    my += std::log(p.y[i]);
  }
  mx /= static_cast<double>(p.x.size());
  my /= static_cast<double>(p.y.size());
  auto fit = [&](double x) { return std::exp(p.fit_intercept + p.fit_exponent * std::log(x)); };
  auto guide = [&](double x) { return std::exp(my + p.guide_slope * (std::log(x) - mx)); };
  os << "<g clip-path=\"url(#plot)\" fill=\"none\" stroke-width=\"1.5\">\n";
  os << "<line x1=\"" << svg_num(ax.map(xl)) << "\" y1=\"" << svg_num(ay.map(fit(xl))) << "\" x2=\""
     << svg_num(ax.map(xh)) << "\" y2=\"" << svg_num(ay.map(fit(xh))) << "\" stroke=\"#1f5fbf\"/>\n";
  os << "<line x1=\"" << svg_num(ax.map(xl)) << "\" y1=\"" << svg_num(ay.map(guide(xl))) << "\" x2=\""
     << svg_num(ax.map(xh)) << "\" y2=\"" << svg_num(ay.map(guide(xh)))
     << "\" stroke=\"#bf3f1f\" stroke-dasharray=\"6 4\"/>\n";
  os << "</g>\n";
  os << "<g fill=\"black\">\n";
  for (std::size_t i = 0; i < p.x.size(); ++i)
    os << "<circle cx=\"" << svg_num(ax.map(p.x[i])) << "\" cy=\"" << svg_num(ay.map(p.y[i])) << "\" r=\"3.5\"/>\n";
  os << "</g>\n";

  char legend[160];
  std::snprintf(legend, sizeof legend, "fit slope %.4f", p.fit_exponent);
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<line x1=\"" << L + 12 << "\" y1=\"" << T + 16 << "\" x2=\"" << L + 40 << "\" y2=\"" << T + 16
     << "\" stroke=\"#1f5fbf\" stroke-width=\"1.5\"/>\n";
  os << "<text x=\"" << L + 46 << "\" y=\"" << T + 20 << "\">" << legend << "</text>\n";
  std::snprintf(legend, sizeof legend, "guide slope %.4f", p.guide_slope);
  os << "<line x1=\"" << L + 12 << "\" y1=\"" << T + 34 << "\" x2=\"" << L + 40 << "\" y2=\"" << T + 34
     << "\" stroke=\"#bf3f1f\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  os << "<text x=\"" << L + 46 << "\" y=\"" << T + 38 << "\">" << legend << "</text>\n";
  if (!p.verdict.empty())
    os << "<text x=\"" << L + 12 << "\" y=\"" << T + 56 << "\">" << detail::svg_escape(p.verdict) << "</text>\n";
  os << "</g>\n</svg>\n";
}

/// Plot of column y against the varied parameter, with the fit and the prediction's slope.
inline LogLogPlot sweep_plot(const SweepTable& t, const std::string& y, double spread_limit) {
  LogLogPlot p;
  p.x_label = t.vary;
  p.y_label = y;
  p.title = y + " vs " + t.vary;
  auto cx = t.column(t.vary), cy = t.column(y);
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.rows[i].ok()) {
      p.x.push_back(cx[i]);
      p.y.push_back(cy[i]);
    }
  RateFit f = fit_rate(t, t.vary, y);
  p.fit_exponent = f.exponent;
  p.fit_intercept = f.intercept;
  std::string scale = "scale_" + y;
  if (t.has(scale)) {
    p.guide_slope = fit_rate(t, t.vary, scale).exponent;
    auto s = sandwich_check(t, y, scale, spread_limit);
    char buf[128];
    std::snprintf(buf, sizeof buf, "spread %.4g (limit %.4g): %s", s.spread, spread_limit,
                  s.bounded ? "bounded" : "unbounded");
    p.verdict = buf;
  } else {
    p.guide_slope = f.exponent;
    p.verdict = "no prediction column";
  }
  return p;
}

}  // namespace gapfield
