#pragma once

// Parameter sweeps over log-spaced grids, power-law fits and bounded-ratio (sandwich) checks.

#include <chrono>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gapfield/asymptotics.hpp"

namespace gapfield {

// ---------------------------------------------------------------------------
// Scenes: a family name plus parameters that rebuild a Configuration

enum class Family { TwoDisks, A, B, C, D };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::TwoDisks: return "two-disks";
    case Family::A: return "A";
    case Family::B: return "B";
    case Family::C: return "C";
    case Family::D: return "D";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  for (Family f : {Family::TwoDisks, Family::A, Family::B, Family::C, Family::D})
    if (s == to_string(f)) return f;
  fail(ErrorKind::InvalidParameter, "unknown scene family '" + s + "'");
}

/// Parameter names each family needs.
inline std::vector<std::string> family_parameters(Family f) {
  switch (f) {
    case Family::TwoDisks: return {"r1", "r2", "eps"};
    case Family::A: return {"r1", "r2", "r3", "a", "eps"};
    case Family::B: return {"r1", "r2", "r3", "eps1", "eps2"};
    case Family::C: return {"r2", "eps"};
    case Family::D: return {"r2", "eps1", "eps2"};
  }
  return {};
}

/// Ellipses used for Cases C and D unless a scene supplies its own shapes.
inline CaseShapes default_case_shapes() {
  return {make_ellipse({0.0, 0.0}, 0.7, 1.0), make_ellipse({0.0, 0.0}, 0.6, 1.0),
          make_ellipse({0.0, 0.0}, 0.7, 1.0), 0.5};
}

struct Scene {
  Family family = Family::TwoDisks;
  std::map<std::string, double> params;
  CaseShapes shapes = default_case_shapes();
  HarmonicBackground background = HarmonicBackground::linear_x();

  friend bool operator==(const Scene& a, const Scene& b) {
    return a.family == b.family && a.params == b.params && a.shapes.left == b.shapes.left &&
           a.shapes.center == b.shapes.center && a.shapes.right == b.shapes.right &&
           a.shapes.overlap == b.shapes.overlap && a.background == b.background;
  }
};

inline Configuration build_scene(const Scene& s) {
  auto p = [&](const char* key) {
    auto it = s.params.find(key);
    if (it == s.params.end())
      fail(ErrorKind::InvalidParameter, std::string("scene ") + to_string(s.family) + " needs parameter '" + key + "'");
    return it->second;
  };
  Configuration cfg;
  switch (s.family) {
    case Family::TwoDisks: cfg = build_two_disks(p("r1"), p("r2"), p("eps")); break;
    case Family::A: cfg = build_case_a(p("r1"), p("r2"), p("r3"), p("a"), p("eps")); break;
    case Family::B: cfg = build_case_b(p("r1"), p("r2"), p("r3"), p("eps1"), p("eps2")); break;
    case Family::C: cfg = build_case_c(s.shapes, p("r2"), p("eps")); break;
    case Family::D: cfg = build_case_d(s.shapes, p("r2"), p("eps1"), p("eps2")); break;
  }
  cfg.background = s.background;
  return cfg;
}

inline int gap_count(Family f) { return (f == Family::B || f == Family::D) ? 2 : 1; }

// ---------------------------------------------------------------------------
// Sweep specification and table

struct SweepSpec {
  Scene scene;
  std::string vary = "eps";
  double min = 1e-5, max = 1e-2;
  int points = 8;
  std::map<std::string, double> ties;  ///< param = factor * (varied value)
  std::vector<std::string> quantities; ///< empty selects every quantity of the family
  MeshControls mesh;
  std::uint64_t seed = 1;
  unsigned workers = 1;                ///< rows solved concurrently
  double spread_limit = 5.0;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1) fail(ErrorKind::InvalidParameter, "sweep grid is empty");
  if (!(lo > 0.0 && hi >= lo)) fail(ErrorKind::InvalidParameter, "sweep grid needs 0 < min <= max");
  if (n == 1) {
    if (lo != hi) fail(ErrorKind::InvalidParameter, "a one-point grid needs min == max");
    return {lo};
  }
  if (!(hi > lo)) fail(ErrorKind::InvalidParameter, "sweep grid must be strictly increasing");
  std::vector<double> g(static_cast<std::size_t>(n));
  double a = std::log(lo), b = std::log(hi);
  for (int k = 0; k < n; ++k) g[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * k / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Quantities a family can record, in canonical column order.
inline std::vector<std::string> family_quantities(Family f) {
  switch (f) {
    case Family::TwoDisks: return {"diff1", "grad1", "h_diff", "psi_diff"};
    case Family::A:
    case Family::C: return {"diff1", "grad1"};
    case Family::B: return {"diff1", "diff2", "grad1", "grad2", "c1", "c2"};
    case Family::D: return {"diff1", "diff2", "grad1", "grad2"};
  }
  return {};
}

/// Prediction column belonging to a quantity, empty if none.
inline std::string scale_column(Family f, const std::string& q) {
  if (q.rfind("diff", 0) == 0 || q.rfind("grad", 0) == 0) return "scale_" + q;
  if (f == Family::TwoDisks && q == "psi_diff") return "scale_psi_diff";
  return {};
}

struct SweepRow {
  std::vector<double> values;  ///< aligned with SweepTable::columns
  std::string status = "ok";   ///< "ok" or the failure kind
  std::string detail;
  double wall_seconds = 0.0;
  bool ok() const { return status == "ok"; }
};

struct SweepTable {
  std::string vary;
  std::vector<std::string> columns;
  std::vector<SweepRow> rows;

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
  bool has(const std::string& name) const { return index_of(name) >= 0; }
  std::vector<double> column(const std::string& name) const {
    int i = index_of(name);
    if (i < 0) fail(ErrorKind::InvalidUsage, "sweep table has no column '" + name + "'");
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r.values[static_cast<std::size_t>(i)]);
    return v;
  }
  std::size_t failed_rows() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.ok() ? 0 : 1;
    return n;
  }
};

namespace detail {

inline std::vector<std::string> selected_quantities(const SweepSpec& spec) {
  auto all = family_quantities(spec.scene.family);
  if (spec.quantities.empty()) return all;
  std::vector<std::string> out;
  for (const auto& q : all)
    if (std::find(spec.quantities.begin(), spec.quantities.end(), q) != spec.quantities.end()) out.push_back(q);
  for (const auto& q : spec.quantities)
    if (std::find(all.begin(), all.end(), q) == all.end())
      fail(ErrorKind::InvalidParameter,
           "quantity '" + q + "' is not available for scene " + to_string(spec.scene.family));
  return out;
}

inline std::vector<std::string> sweep_columns(const SweepSpec& spec) {
  std::vector<std::string> cols{spec.vary};
  for (const auto& [name, factor] : spec.ties) cols.push_back(name);
  auto qs = selected_quantities(spec);
  for (const auto& q : qs) cols.push_back(q);
  for (const auto& q : qs)
    if (auto s = scale_column(spec.scene.family, q); !s.empty()) cols.push_back(s);
  for (const char* c : {"nodes", "min_panel", "condition"}) cols.push_back(c);
  return cols;
}

inline void validate_spec(const SweepSpec& spec) {
  auto names = family_parameters(spec.scene.family);
  auto known = [&](const std::string& n) { return std::find(names.begin(), names.end(), n) != names.end(); };
  if (!known(spec.vary))
    fail(ErrorKind::InvalidParameter,
         "scene " + std::string(to_string(spec.scene.family)) + " has no parameter '" + spec.vary + "'");
  for (const auto& [name, factor] : spec.ties) {
    if (!known(name) || name == spec.vary) fail(ErrorKind::InvalidParameter, "cannot tie parameter '" + name + "'");
    if (!(factor > 0.0)) fail(ErrorKind::InvalidParameter, "tie factor for '" + name + "' must be positive");
  }
  for (const auto& n : names)
    if (n != spec.vary && !spec.ties.count(n) && !spec.scene.params.count(n))
      fail(ErrorKind::InvalidParameter, "scene parameter '" + n + "' is not set");
  if (!(spec.spread_limit >= 1.0)) fail(ErrorKind::InvalidParameter, "spread limit must be at least 1");
  (void)selected_quantities(spec);
}

inline std::map<std::string, double> row_params(const SweepSpec& spec, double value) {
  auto p = spec.scene.params;
  p[spec.vary] = value;
  for (const auto& [name, factor] : spec.ties) p[name] = factor * value;
  return p;
}

inline std::map<std::string, double> measure(const Scene& scene, const std::vector<std::string>& qs,
                                             const MeshControls& mc) {
  std::map<std::string, double> out;
  auto want = [&](const char* q) { return std::find(qs.begin(), qs.end(), q) != qs.end(); };
  Configuration cfg = build_scene(scene);
  auto op = assemble(cfg.bodies, mc);
  auto u = solve_u(op, cfg);
  int gaps = gap_count(scene.family);
  for (int k = 1; k <= gaps; ++k) {
    std::string d = "diff" + std::to_string(k), g = "grad" + std::to_string(k);
    if (want(d.c_str())) out[d] = u.constants[static_cast<std::size_t>(k)] - u.constants[static_cast<std::size_t>(k - 1)];
    if (want(g.c_str())) out[g] = max_gap_gradient(u, gap(cfg, k - 1, k)).value;
  }
  if (want("h_diff")) {
    auto h = solve_h(op, {0}, {1});
    out["h_diff"] = h.constants[1] - h.constants[0];
  }
  if (want("psi_diff"))
    out["psi_diff"] = psi_gap_difference(std::get<Disk>(cfg.bodies[0].parts()[0]), std::get<Disk>(cfg.bodies[1].parts()[0]));
  if (want("c1") || want("c2")) {
    auto rep = representation_coeffs(op, cfg);
    out["c1"] = rep.c1;
    out["c2"] = rep.c2;
  }
  out["nodes"] = static_cast<double>(op.mesh->size());
  out["min_panel"] = op.mesh->min_panel_length();
  out["condition"] = u.condition;
  return out;
}

inline std::map<std::string, double> scales(const Scene& scene) {
  std::map<std::string, double> out;
  const auto& p = scene.params;
  if (scene.family == Family::TwoDisks) {
    double r1 = p.at("r1"), r2 = p.at("r2"), eps = p.at("eps");
    double diff = two_disk_difference_asymptotic(r1, r2, eps, scene.background);
    out["scale_diff1"] = diff;
    out["scale_grad1"] = diff / eps;
    out["scale_psi_diff"] = std::sqrt((r1 + r2) / (r1 * r2)) * std::sqrt(eps);
    return out;
  }
  Configuration tagged;
  tagged.params = p;
  tagged.tag = scene.family == Family::A ? CaseTag::A
             : scene.family == Family::B ? CaseTag::B
             : scene.family == Family::C ? CaseTag::C
                                         : CaseTag::D;
  for (const auto& b : predictions_for(tagged)) {
    out["scale_diff" + std::to_string(b.gap)] = b.difference;
    out["scale_grad" + std::to_string(b.gap)] = b.upper;
  }
  return out;
}

}  // namespace detail

/// Solves every grid point. Rows are independent and merged in grid order; a failing
/// solve is recorded with its cause. Throws sweep-failure only when every row failed.
inline SweepTable run_sweep(const SweepSpec& spec) {
  detail::validate_spec(spec);
  auto grid = log_grid(spec.min, spec.max, spec.points);
  SweepTable table;
  table.vary = spec.vary;
  table.columns = detail::sweep_columns(spec);
  auto qs = detail::selected_quantities(spec);
  table.rows.resize(grid.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  parallel_for(grid.size(), spec.workers, [&](std::size_t k) {
    auto start = std::chrono::steady_clock::now();
    SweepRow& row = table.rows[k];
    Scene scene = spec.scene;
    scene.params = detail::row_params(spec, grid[k]);
    std::map<std::string, double> got;
    try {
      got = detail::measure(scene, qs, spec.mesh);
      for (const auto& [name, v] : detail::scales(scene)) got[name] = v;
    } catch (const Error& e) {
      row.status = to_string(e.kind());
      row.detail = e.what();
    }
    for (const auto& c : table.columns) {
      auto it = scene.params.find(c);
      if (c == spec.vary || spec.ties.count(c)) row.values.push_back(it->second);
      else if (auto g = got.find(c); g != got.end()) row.values.push_back(g->second);
      else row.values.push_back(nan);
    }
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  if (table.failed_rows() == table.rows.size())
    fail(ErrorKind::SweepFailure, "every sweep row failed; first cause: " + table.rows.front().detail);
  return table;
}

// ---------------------------------------------------------------------------
// Fits and sandwich checks

struct RateFit {
  double exponent = 0.0;
  double intercept = 0.0;          ///< natural-log intercept
  double r_squared = 0.0;
  std::vector<double> residuals;   ///< log-space residuals of the used points
  std::size_t used = 0;
  std::size_t excluded = 0;        ///< failed rows left out
};

/// Least-squares line through (log x, log y).
inline RateFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::InvalidUsage, "fit columns differ in length");
  if (x.size() < 4) fail(ErrorKind::InvalidUsage, "a rate fit needs at least 4 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
      fail(ErrorKind::DomainError, "power-law fits need positive finite data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorKind::DomainError, "x values must not all coincide");
  RateFit f;
  f.exponent = sxy / sxx;
  f.intercept = my - f.exponent * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    double r = ly[i] - (f.intercept + f.exponent * lx[i]);
    f.residuals.push_back(r);
    ss_res += r * r;
  }
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  f.used = lx.size();
  return f;
}

/// Fit of column y against column x over the rows that solved.
inline RateFit fit_rate(const SweepTable& t, const std::string& x, const std::string& y) {
  auto cx = t.column(x), cy = t.column(y);
  std::vector<double> px, py;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.rows[i].ok()) { px.push_back(cx[i]); py.push_back(cy[i]); }
  RateFit f = fit_power_law(px, py);
  f.excluded = t.failed_rows();
  return f;
}

/// Change of the fitted exponent when the row with the largest x is dropped.
inline double exponent_stability(const SweepTable& t, const std::string& x, const std::string& y) {
  RateFit full = fit_rate(t, x, y);
  auto cx = t.column(x), cy = t.column(y);
  std::vector<double> px, py;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.rows[i].ok()) { px.push_back(cx[i]); py.push_back(cy[i]); }
  if (px.size() < 5) return std::nan("");  // no refit left after dropping a point
  auto top = std::max_element(px.begin(), px.end()) - px.begin();
  px.erase(px.begin() + top);
  py.erase(py.begin() + top);
  return std::abs(fit_power_law(px, py).exponent - full.exponent);
}

struct SandwichResult {
  double min = 0.0, max = 0.0, spread = 0.0;
  bool bounded = false;
  std::vector<double> ratios;
};

inline SandwichResult sandwich(const std::vector<double>& q, const std::vector<double>& pred, double limit) {
  if (q.size() != pred.size()) fail(ErrorKind::InvalidUsage, "sandwich columns differ in length");
  if (q.empty()) fail(ErrorKind::InvalidUsage, "sandwich check on an empty column");
  SandwichResult s;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (pred[i] == 0.0) fail(ErrorKind::DomainError, "zero prediction in sandwich check");
    s.ratios.push_back(q[i] / pred[i]);
  }
  s.min = *std::min_element(s.ratios.begin(), s.ratios.end());
  s.max = *std::max_element(s.ratios.begin(), s.ratios.end());
  s.spread = s.min > 0.0 ? s.max / s.min : std::numeric_limits<double>::infinity();
  s.bounded = s.spread <= limit;
  return s;
}

/// Ratio of column q to prediction column pred over the rows that solved.
inline SandwichResult sandwich_check(const SweepTable& t, const std::string& q, const std::string& pred,
                                     double limit) {
  auto cq = t.column(q), cp = t.column(pred);
  std::vector<double> a, b;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.rows[i].ok()) { a.push_back(cq[i]); b.push_back(cp[i]); }
  return sandwich(a, b, limit);
}

// ---------------------------------------------------------------------------
// Summary footer and CSV

using Footer = std::vector<std::pair<std::string, std::string>>;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Fits every quantity that has a prediction column against the varied parameter, plus the
/// prediction's own slope, the sandwich spread and the exponent stability.
inline Footer summarize(const SweepTable& t, double spread_limit) {
  Footer f;
  f.emplace_back("vary", t.vary);
  f.emplace_back("rows", std::to_string(t.rows.size()));
  f.emplace_back("failed_rows", std::to_string(t.failed_rows()));
  f.emplace_back("spread_limit", format_number(spread_limit));
  for (const auto& c : t.columns) {
    std::string scale = "scale_" + c;
    if (c.rfind("scale_", 0) == 0 || !t.has(scale)) continue;
    std::string k = c + ".";
    try {
      RateFit fit = fit_rate(t, t.vary, c);
      RateFit pred = fit_rate(t, t.vary, scale);
      f.emplace_back(k + "exponent", format_number(fit.exponent));
      f.emplace_back(k + "intercept", format_number(fit.intercept));
      f.emplace_back(k + "r_squared", format_number(fit.r_squared));
      f.emplace_back(k + "predicted_exponent", format_number(pred.exponent));
      f.emplace_back(k + "stability", format_number(exponent_stability(t, t.vary, c)));
    } catch (const Error& e) {
      f.emplace_back(k + "fit_error", to_string(e.kind()));
    }
    try {
      auto s = sandwich_check(t, c, scale, spread_limit);
      f.emplace_back(k + "ratio_min", format_number(s.min));
      f.emplace_back(k + "ratio_max", format_number(s.max));
      f.emplace_back(k + "spread", format_number(s.spread));
      f.emplace_back(k + "sandwich", s.bounded ? "bounded" : "unbounded");
    } catch (const Error& e) {
      f.emplace_back(k + "sandwich_error", to_string(e.kind()));
    }
  }
  return f;
}

inline std::string footer_value(const Footer& f, const std::string& key) {
  for (const auto& [k, v] : f)
    if (k == key) return v;
  fail(ErrorKind::InvalidUsage, "footer has no key '" + key + "'");
}

/// CSV: optional timing comment, header, one line per row, blank line, key=value footer.
/// Everything except the comment line is a deterministic function of the spec.
inline void write_sweep_csv(std::ostream& os, const SweepTable& t, const Footer& footer, bool timing = true) {
  if (timing) {
    os << "# wall_seconds=";
    for (std::size_t i = 0; i < t.rows.size(); ++i) os << (i ? ";" : "") << format_number(t.rows[i].wall_seconds);
    os << '\n';
  }
  os << "row";
  for (const auto& c : t.columns) os << ',' << c;
  os << ",status,detail\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    os << i;
    for (double v : r.values) os << ',' << format_number(v);
    std::string d = r.detail;
    std::replace(d.begin(), d.end(), ',', ';');
    std::replace(d.begin(), d.end(), '\n', ' ');
    os << ',' << r.status << ',' << d << '\n';
  }
  if (!footer.empty()) {
    os << '\n';
    for (const auto& [k, v] : footer) os << k << '=' << v << '\n';
  }
}

/// Reads a table written by write_sweep_csv; the footer, if present, goes to `footer`.
inline SweepTable read_sweep_csv(std::istream& is, Footer* footer = nullptr) {
  SweepTable t;
  std::string line;
  int lineno = 0;
  bool header = false, in_footer = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') continue;
    if (line.empty()) {
      if (header) in_footer = true;
      continue;
    }
    if (in_footer) {
      auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ", column 1: footer entry lacks '='");
      if (footer) footer->emplace_back(line.substr(0, eq), line.substr(eq + 1));
      continue;
    }
    auto cells = split(line);
    if (!header) {
      if (cells.size() < 4 || cells.front() != "row" || cells[cells.size() - 2] != "status")
        fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ", column 1: not a sweep table header");
      t.columns.assign(cells.begin() + 1, cells.end() - 2);
      t.vary = t.columns.front();
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size() + 3)
      fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ", column 1: expected " +
                                      std::to_string(t.columns.size() + 3) + " cells");
    SweepRow r;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const std::string& s = cells[c + 1];
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0')
        fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ", cell " + std::to_string(c + 2) +
                                        ": '" + s + "' is not a number");
      r.values.push_back(v);
    }
    r.status = cells[cells.size() - 2];
    r.detail = cells.back();
    t.rows.push_back(std::move(r));
  }
  if (!header) fail(ErrorKind::ParseError, "line 1, column 1: empty sweep table");
  return t;
}

}  // namespace gapfield
