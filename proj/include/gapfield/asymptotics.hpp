#pragma once

// Predicted blow-up scales for the canonical scenes and the lemma diagnostics that back them.
//
// Every scale carries an unknown constant, so nothing here asserts a value: diagnostics
// divide a measured quantity by its predicted scale and ask whether the ratio stays in a
// bounded band (spread = max / min) over a gap sweep.

#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gapfield/field_solver.hpp"
#include "gapfield/images.hpp"

namespace gapfield {

struct BoundPrediction {
  CaseTag tag = CaseTag::Free;
  int gap = 1;                 ///< which gap the prediction belongs to (1 or 2)
  double lower = 0.0;          ///< gradient scale of the lower bound
  double upper = 0.0;          ///< gradient scale of the upper bound
  double difference = 0.0;     ///< potential-difference scale u|dD_{i+1} - u|dD_i
  std::string formula;         ///< which radii and gaps entered
};

namespace detail {

inline double harmonic_prefactor(double r1, double r3) { return r1 * r3 / (r1 + r3); }

inline BoundPrediction radii_prediction(CaseTag tag, int gap, double r1, double r2, double r3, double eps) {
  double pre = harmonic_prefactor(r1, r3) / std::sqrt(r2);
  double grad = pre / std::sqrt(eps);
  return {tag, gap, grad, grad, pre * std::sqrt(eps), "r1 r3/(r1+r3) * r2^-1/2 * eps^(-/+)1/2"};
}

inline BoundPrediction shape_prediction(CaseTag tag, int gap, double r2, double eps) {
  double grad = 1.0 / std::sqrt(r2 * eps);
  return {tag, gap, grad, grad, std::sqrt(eps / r2), "r2^-1/2 * eps^(-/+)1/2"};
}

}  // namespace detail

inline BoundPrediction bound_case_a(double r1, double r2, double r3, double eps) {
  detail::require_positive({{"r1", r1}, {"r2", r2}, {"r3", r3}, {"eps", eps}});
  return detail::radii_prediction(CaseTag::A, 1, r1, r2, r3, eps);
}

inline std::pair<BoundPrediction, BoundPrediction> bound_case_b(double r1, double r2, double r3, double eps1,
                                                                double eps2) {
  detail::require_positive({{"r1", r1}, {"r2", r2}, {"r3", r3}, {"eps1", eps1}, {"eps2", eps2}});
  return {detail::radii_prediction(CaseTag::B, 1, r1, r2, r3, eps1),
          detail::radii_prediction(CaseTag::B, 2, r1, r2, r3, eps2)};
}

inline BoundPrediction bound_case_c(double r2, double eps) {
  detail::require_positive({{"r2", r2}, {"eps", eps}});
  return detail::shape_prediction(CaseTag::C, 1, r2, eps);
}

inline std::pair<BoundPrediction, BoundPrediction> bound_case_d(double r2, double eps1, double eps2) {
  detail::require_positive({{"r2", r2}, {"eps1", eps1}, {"eps2", eps2}});
  return {detail::shape_prediction(CaseTag::D, 1, r2, eps1), detail::shape_prediction(CaseTag::D, 2, r2, eps2)};
}

/// Three conductors of comparable size: gradient scale eps_i^-1/2 in each gap.
inline std::pair<BoundPrediction, BoundPrediction> bound_three_general(double eps1, double eps2) {
  detail::require_positive({{"eps1", eps1}, {"eps2", eps2}});
  auto one = [](int gap, double eps) {
    double g = 1.0 / std::sqrt(eps);
    return BoundPrediction{CaseTag::Free, gap, g, g, std::sqrt(eps), "eps^(-/+)1/2"};
  };
  return {one(1, eps1), one(2, eps2)};
}

/// Prediction for a configuration built by one of the case builders.
inline std::vector<BoundPrediction> predictions_for(const Configuration& cfg) {
  switch (cfg.tag) {
    case CaseTag::A:
      return {bound_case_a(cfg.param("r1"), cfg.param("r2"), cfg.param("r3"), cfg.param("eps"))};
    case CaseTag::B: {
      auto [a, b] = bound_case_b(cfg.param("r1"), cfg.param("r2"), cfg.param("r3"), cfg.param("eps1"),
                                 cfg.param("eps2"));
      return {a, b};
    }
    case CaseTag::C:
      return {bound_case_c(cfg.param("r2"), cfg.param("eps"))};
    case CaseTag::D: {
      auto [a, b] = bound_case_d(cfg.param("r2"), cfg.param("eps1"), cfg.param("eps2"));
      return {a, b};
    }
    case CaseTag::Free: break;
  }
  fail(ErrorKind::InvalidUsage, "free configurations carry no case prediction");
}

// ---------------------------------------------------------------------------
// Lemma diagnostics

enum class Verdict { Pass, Fail, Info };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Info: return "info";
  }
  return "?";
}

struct LemmaCheck {
  std::string name;
  double ratio = 0.0;  ///< value at the configuration's own gap
  double min = 0.0;    ///< over the sweep
  double max = 0.0;
  Verdict verdict = Verdict::Info;
  std::string note;
};

struct LemmaReport {
  CaseTag tag = CaseTag::Free;
  std::vector<double> sweep;  ///< gap values of the diagnostic sweep
  std::vector<LemmaCheck> checks;

  bool passed() const {
    for (const auto& c : checks)
      if (c.verdict == Verdict::Fail) return false;
    return true;
  }
  const LemmaCheck& find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    fail(ErrorKind::InvalidUsage, "no check named '" + name + "'");
  }
};

struct LemmaOptions {
  std::vector<double> eps_grid{1e-5, 1e-4, 1e-3};
  double spread_limit = 10.0;
  double sign_tolerance = 1e-8;     ///< relative to the field scale on the boundary
  double residual_tolerance = 1e-6; ///< identity residuals
  double health_tolerance = 1e-8;   ///< flux and boundary-constancy residuals
  int nestings = 20;
  std::uint64_t seed = 1;
  unsigned workers = 1;             ///< sweep points solved concurrently
};

namespace detail {

/// d(nu) of a closed-form two-disk field at a boundary point, nu into the body.
inline double psi_normal_derivative(const TwoDiskField& f, Vec2 x, Vec2 outward) {
  return -dot(f.gradient(x), outward);
}

inline double difference_of(const ExteriorSolution& s, int from, int to) { return s.constants[to] - s.constants[from]; }

// Ratio check over a sweep: values[k] must be positive and max/min <= limit.
inline LemmaCheck spread_check(std::string name, const std::vector<double>& values, std::size_t own,
                               double limit, std::string note) {
  LemmaCheck c;
  c.name = std::move(name);
  c.min = *std::min_element(values.begin(), values.end());
  c.max = *std::max_element(values.begin(), values.end());
  c.ratio = values[own];
  bool ok = c.min > 0.0 && std::isfinite(c.max) && c.max <= limit * c.min;
  c.verdict = ok ? Verdict::Pass : Verdict::Fail;
  std::ostringstream os;
  os << note << "; spread " << (c.min > 0.0 ? c.max / c.min : std::numeric_limits<double>::infinity())
     << " (limit " << limit << ")";
  c.note = os.str();
  return c;
}

// Sign check: every value must be <= tolerance (values already normalized).
inline LemmaCheck bound_check(std::string name, const std::vector<double>& values, std::size_t own,
                              double tolerance, std::string note) {
  LemmaCheck c;
  c.name = std::move(name);
  c.min = *std::min_element(values.begin(), values.end());
  c.max = *std::max_element(values.begin(), values.end());
  c.ratio = values[own];
  c.verdict = c.max <= tolerance ? Verdict::Pass : Verdict::Fail;
  c.note = std::move(note);
  return c;
}

inline LemmaCheck info_check(std::string name, const std::vector<double>& values, std::size_t own, std::string note) {
  LemmaCheck c;
  c.name = std::move(name);
  c.min = *std::min_element(values.begin(), values.end());
  c.max = *std::max_element(values.begin(), values.end());
  c.ratio = values[own];
  c.verdict = Verdict::Info;
  c.note = std::move(note);
  return c;
}

inline std::size_t own_index(std::vector<double>& grid, double eps) {
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::abs(grid[k] - eps) <= 1e-12 * eps) return k;
  grid.push_back(eps);
  std::sort(grid.begin(), grid.end());
  return static_cast<std::size_t>(std::find(grid.begin(), grid.end(), eps) - grid.begin());
}

inline double max_abs_sigma(const ExteriorSolution& s, int body, int part = -1) {
  const Mesh& m = *s.mesh;
  double v = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.body[i] != body) continue;
    if (part >= 0 && m.arcs[m.panels[m.panel_of[i]].arc].part != part) continue;
    v = std::max(v, std::abs(s.sigma[i]));
  }
  return v;
}

/// Health of one u-solution: independent flux quadrature and boundary constancy.
inline void health_checks(const ExteriorSolution& u, const LemmaOptions& opt, std::vector<LemmaCheck>& out) {
  double flux = flux_check(u).max_residual;
  double cons = constancy_residual(u);
  out.push_back(bound_check("flux_residual", {flux}, 0, opt.health_tolerance,
                            "independent contour flux vs imposed flux, relative to total |charge|"));
  out.push_back(bound_check("boundary_constancy", {cons}, 0, opt.health_tolerance,
                            "off-node boundary deviation relative to the constant spread"));
}

/// Potential-difference identity u|dB - u|dA = int_dA H d(nu)h + int_dB H d(nu)h on a
/// two-conductor scene, both sides from independent solves.
inline double identity_residual(const Configuration& two, const MeshControls& mc) {
  auto op = assemble(two.bodies, mc);
  auto u = solve_u(op, two);
  auto h = solve_h(op, two.conductors[0], two.conductors[1]);
  double lhs = u.constants[1] - u.constants[0];
  auto H = [&](Vec2 x) { return two.background.value(x); };
  double rhs = boundary_flux_weighted(h, 0, H) + boundary_flux_weighted(h, 1, H);
  return std::abs(lhs - rhs) / std::abs(lhs);
}

inline LemmaCheck monotonic_nestings(const LemmaOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.nestings; ++k) {
    // inner pair: radii in [0.05, 1], gap in [1e-4, 0.2]
    double ra = 0.05 + 0.95 * unit(rng), rb = 0.05 + 0.95 * unit(rng);
    double g = std::pow(10.0, -4.0 + std::log10(2000.0) * unit(rng));
    Disk a{{-ra - 0.5 * g, 0.0}, ra}, b{{rb + 0.5 * g, 0.0}, rb};
    // outer disks contain the inner ones and keep a positive gap
    auto grow = [&](const Disk& d, double side) {
      double extra = d.radius * (0.1 + 2.0 * unit(rng));
      double shift = extra * unit(rng);
      double ang = (unit(rng) - 0.5) * kPi;
      Vec2 dir{side * std::cos(ang), std::sin(ang)};
      return Disk{d.center + shift * dir, d.radius + extra};
    };
    Disk ta = grow(a, -1.0), tb = grow(b, +1.0);
    double outer_gap = distance(ta.center, tb.center) - ta.radius - tb.radius;
    if (!(outer_gap > 1e-6 * std::min(ta.radius, tb.radius))) {
      --k;
      continue;
    }
    double small = psi_gap_difference(a, b), large = psi_gap_difference(ta, tb);
    if (!(large >= 0.0 && large <= small)) ++violations;
    worst = std::max(worst, (large - small) / small);
  }
  LemmaCheck c;
  c.name = "psi_monotonic_nesting";
  c.ratio = c.max = worst;
  c.min = static_cast<double>(violations);
  c.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
  c.note = std::to_string(opt.nestings) + " random disk nestings; ratio = max (outer - inner) / inner, min = violations";
  return c;
}

// Two-disk closed-form field of two parts of the scene.
inline TwoDiskField disk_pair_field(const Body& a, const Body& b, int part_b = 0) {
  const auto* da = std::get_if<Disk>(&a.parts()[0]);
  const auto* db = std::get_if<Disk>(&b.parts()[part_b]);
  if (!da || !db) fail(ErrorKind::InvalidUsage, "closed-form comparison needs disk parts");
  return psi_two_disks(*da, *db);
}

inline void require_disks(const Configuration& cfg) {
  for (const auto& b : cfg.bodies)
    for (const auto& p : b.parts())
      if (!std::holds_alternative<Disk>(p)) fail(ErrorKind::InvalidUsage, "lemma diagnostics need disk geometry");
}

// ---- Case A: D1 disk, D2 = B_r2 u B_r3 lens

struct CaseAPoint {
  double eps = 0.0;
  double big_arc_flux = 0.0;     // max |d(nu)h| on dD2 \ B_r2
  double sign_margin = 0.0;      // max over dD1 of (d(nu)h - M d(nu)h3) / scale
  double m = 0.0;                // comparison ratio M
  double same_difference = 0.0;  // |(h diff) - (h2 diff)|
  double lens_vs_disk = 0.0;     // (h diff) - (h2 diff), must be <= 0
};

inline CaseAPoint case_a_point(const Configuration& cfg, const MeshControls& mc) {
  CaseAPoint p;
  p.eps = cfg.param("eps");
  auto op = assemble(cfg.bodies, mc);
  auto h = solve_h(op, {0}, {1});
  double hdiff = difference_of(h, 0, 1);
  p.big_arc_flux = max_abs_sigma(h, 1, 1);
  const Body& d1 = cfg.bodies[0];
  const Body& d2 = cfg.bodies[1];
  auto h2 = disk_pair_field(d1, d2, 0);
  auto h3 = disk_pair_field(d1, d2, 1);
  double h2diff = h2.k2 - h2.k1, h3diff = h3.k2 - h3.k1;
  p.m = hdiff / h3diff;
  const Mesh& m = *h.mesh;
  double scale = max_abs_sigma(h, 0);
  double margin = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.body[i] != 0) continue;
    double dh = -h.sigma[i];
    double dh3 = psi_normal_derivative(h3, m.x[i], m.normal[i]);
    margin = std::max(margin, (dh - p.m * dh3) / scale);
  }
  p.sign_margin = margin;
  p.same_difference = std::abs(hdiff - h2diff);
  p.lens_vs_disk = (hdiff - h2diff) / h2diff;
  return p;
}

inline LemmaReport lemma_suite_a(const Configuration& cfg, const MeshControls& mc, const LemmaOptions& opt) {
  require_disks(cfg);
  LemmaReport rep;
  rep.tag = CaseTag::A;
  std::vector<double> grid = opt.eps_grid;
  std::size_t own = own_index(grid, cfg.param("eps"));
  rep.sweep = grid;
  std::vector<CaseAPoint> pts(grid.size());
  parallel_for(grid.size(), opt.workers, [&](std::size_t k) {
    auto c = build_case_a(cfg.param("r1"), cfg.param("r2"), cfg.param("r3"), cfg.param("a"), grid[k]);
    c.background = cfg.background;
    pts[k] = case_a_point(c, mc);
  });
  auto column = [&](auto f) {
    std::vector<double> v;
    for (const auto& p : pts) v.push_back(f(p));
    return v;
  };
  rep.checks.push_back(bound_check(
      "potential_difference_identity", {identity_residual(cfg, mc)}, 0, opt.residual_tolerance,
      "|u|dD2 - u|dD1 - sum_i int_dDi H d(nu)h| relative"));
  rep.checks.push_back(spread_check("big_arc_flux_over_sqrt_eps",
                                    column([](const CaseAPoint& p) { return p.big_arc_flux / std::sqrt(p.eps); }),
                                    own, opt.spread_limit, "max |d(nu)h| on dD2 outside B_r2, divided by sqrt(eps)"));
  rep.checks.push_back(bound_check("comparison_sign", column([](const CaseAPoint& p) { return p.sign_margin; }), own,
                                   opt.sign_tolerance,
                                   "max over dD1 of (d(nu)h - M d(nu)h3) / max|d(nu)h|, must be <= 0"));
  {
    auto ms = column([](const CaseAPoint& p) { return p.m; });
    LemmaCheck c = info_check("comparison_ratio_M", ms, own, "M = (h diff) / (h3 diff), must lie in (0, 1]");
    c.verdict = c.min > 0.0 && c.max <= 1.0 ? Verdict::Pass : Verdict::Fail;
    rep.checks.push_back(c);
  }
  rep.checks.push_back(spread_check("lump_difference_over_eps",
                                    column([](const CaseAPoint& p) { return p.same_difference / p.eps; }), own,
                                    opt.spread_limit, "|(h diff) - (h2 diff)| / eps with h2 = Psi[D1, B_r2]"));
  rep.checks.push_back(bound_check("lens_below_small_disk", column([](const CaseAPoint& p) { return p.lens_vs_disk; }),
                                   own, opt.sign_tolerance,
                                   "((h diff) - (h2 diff)) / (h2 diff): enlarging B_r2 to the lens cannot raise the difference"));
  rep.checks.push_back(monotonic_nestings(opt));
  return rep;
}

// ---- Case B: three disks

struct CaseBPoint {
  double eps1 = 0.0, eps2 = 0.0;
  double h1_diff = 0.0, h2_diff = 0.0;
  double h1_vs_pair = 0.0;        // (h1 diff - Psi[D1,D2] diff) / Psi diff, <= 0
  double h1_diff_min = 0.0;       // h1 diff, must be > 0
  double d2_sign = 0.0;           // max over dD2 of (-d(nu)h1) / scale, <= 0
  double d2_pair = 0.0;           // max over dD2 of (d(nu)h1 - d(nu)Psi[D1,D2]) / scale, <= 0
  double d3_sign = 0.0;           // max over dD3 of (-d(nu)h1) / scale
  double d3_flux = 0.0;           // max over dD3 of d(nu)h1
  double d1_sign = 0.0;           // max over dD1 of d(nu)h1 / scale, <= 0
  double d4_ratio_min = 0.0;      // min over dD1 of d(nu)h1 / d(nu)Psi[D1,D4]
  double h1_vs_d4 = 0.0;          // (Psi[D1,D4] diff - h1 diff) / h1 diff, <= 0
  double weighted_flux = 0.0;     // |sum_i int H d(nu)h1|
  double grad_h1_gap1 = 0.0, grad_h2_gap1 = 0.0, grad_h1_gap2 = 0.0, grad_h2_gap2 = 0.0;
  double c1 = 0.0, c2 = 0.0;
};

inline CaseBPoint case_b_point(const Configuration& cfg, const MeshControls& mc) {
  CaseBPoint p;
  p.eps1 = cfg.param("eps1");
  p.eps2 = cfg.param("eps2");
  auto op = assemble(cfg.bodies, mc);
  auto rep = representation_coeffs(op, cfg);
  const auto& h1 = rep.h1;
  const auto& h2 = rep.h2;
  p.c1 = rep.c1;
  p.c2 = rep.c2;
  p.h1_diff = difference_of(h1, 0, 1);
  p.h2_diff = difference_of(h2, 0, 1);
  p.h1_diff_min = p.h1_diff;
  const Body &b1 = cfg.bodies[0], &b2 = cfg.bodies[1], &b3 = cfg.bodies[2];
  auto w1 = disk_pair_field(b1, b2);
  p.h1_vs_pair = (p.h1_diff - (w1.k2 - w1.k1)) / (w1.k2 - w1.k1);
  // D4: radius 1.75 r3, touching D2 at its gap point so that dist(D1, D4) = dist(D1, D2)
  const Disk& disk1 = std::get<Disk>(b1.parts()[0]);
  const Disk& disk2 = std::get<Disk>(b2.parts()[0]);
  const Disk& disk3 = std::get<Disk>(b3.parts()[0]);
  Vec2 axis = (disk2.center - disk1.center) / distance(disk2.center, disk1.center);
  double r4 = 1.75 * disk3.radius;
  Vec2 touch = disk2.center - disk2.radius * axis;
  Disk d4{touch + r4 * axis, r4};
  if (distance(d4.center, disk3.center) + disk3.radius > r4 * (1.0 + 1e-12))
    fail(ErrorKind::InvalidGeometry, "comparison disk does not contain D3");
  auto w4 = psi_two_disks(disk1, d4);
  p.h1_vs_d4 = ((w4.k2 - w4.k1) - p.h1_diff) / p.h1_diff;

  const Mesh& m = *h1.mesh;
  double scale = max_abs_sigma(h1, 0);
  p.d2_sign = p.d2_pair = p.d3_sign = p.d1_sign = -std::numeric_limits<double>::infinity();
  p.d4_ratio_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.size(); ++i) {
    double dh = -h1.sigma[i];
    if (m.body[i] == 1) {
      p.d2_sign = std::max(p.d2_sign, -dh / scale);
      p.d2_pair = std::max(p.d2_pair, (dh - psi_normal_derivative(w1, m.x[i], m.normal[i])) / scale);
    } else if (m.body[i] == 2) {
      p.d3_sign = std::max(p.d3_sign, -dh / scale);
      p.d3_flux = std::max(p.d3_flux, dh);
    } else {
      p.d1_sign = std::max(p.d1_sign, dh / scale);
      p.d4_ratio_min = std::min(p.d4_ratio_min, dh / psi_normal_derivative(w4, m.x[i], m.normal[i]));
    }
  }
  auto H = [&](Vec2 x) { return cfg.background.value(x); };
  p.weighted_flux = std::abs(bodies_flux_weighted(h1, {0, 1, 2}, H));
  auto g12 = gap(cfg, 0, 1), g23 = gap(cfg, 1, 2);
  p.grad_h1_gap1 = max_gap_gradient(h1, g12).value;
  p.grad_h2_gap1 = max_gap_gradient(h2, g12).value;
  p.grad_h1_gap2 = max_gap_gradient(h1, g23).value;
  p.grad_h2_gap2 = max_gap_gradient(h2, g23).value;
  return p;
}

inline LemmaReport lemma_suite_b(const Configuration& cfg, const MeshControls& mc, const LemmaOptions& opt) {
  require_disks(cfg);
  LemmaReport rep;
  rep.tag = CaseTag::B;
  double e1 = cfg.param("eps1"), ratio = cfg.param("eps2") / e1;
  std::vector<double> grid = opt.eps_grid;
  std::size_t own = own_index(grid, e1);
  rep.sweep = grid;
  std::vector<CaseBPoint> pts(grid.size());
  parallel_for(grid.size(), opt.workers, [&](std::size_t k) {
    auto c = build_case_b(cfg.param("r1"), cfg.param("r2"), cfg.param("r3"), grid[k], ratio * grid[k]);
    c.background = cfg.background;
    pts[k] = case_b_point(c, mc);
  });
  auto column = [&](auto f) {
    std::vector<double> v;
    for (const auto& p : pts) v.push_back(f(p));
    return v;
  };
  Configuration pair;
  pair.bodies = {cfg.bodies[0], cfg.bodies[1]};
  pair.conductors = {{0}, {1}};
  pair.background = cfg.background;
  rep.checks.push_back(bound_check("potential_difference_identity", {identity_residual(pair, mc)}, 0,
                                   opt.residual_tolerance,
                                   "two-disk sub-scene D1, D2: |u diff - sum_i int_dDi H d(nu)h| relative"));
  {
    const Disk& a = std::get<Disk>(cfg.bodies[0].parts()[0]);
    const Disk& b = std::get<Disk>(cfg.bodies[1].parts()[0]);
    auto op = assemble(pair.bodies, mc);
    double num = difference_of(solve_u(op, pair), 0, 1);
    double closed = two_disk_potential_difference(a, b, cfg.background);
    double literal = two_disk_potential_difference_literal(a, b, cfg.background);
    rep.checks.push_back(bound_check("closed_form_difference", {std::abs(num - closed) / std::abs(num)}, 0,
                                     opt.residual_tolerance, "|u diff - (H(p2) - H(p1))| / |u diff| on D1, D2"));
    rep.checks.push_back(info_check("literal_reading_difference", {std::abs(num - literal) / std::abs(num)}, 0,
                                    "|u diff - (H(p2) - H(-p1))| / |u diff|: the printed variant, for reference"));
  }
  rep.checks.push_back(bound_check("h1_below_pair", column([](const CaseBPoint& p) { return p.h1_vs_pair; }), own,
                                   opt.sign_tolerance, "(h1 diff - Psi[D1,D2] diff) / Psi diff, must be <= 0"));
  {
    auto v = column([](const CaseBPoint& p) { return p.h1_diff_min; });
    LemmaCheck c = info_check("h1_difference_positive", v, own, "h1|dD2 - h1|dD1 > 0");
    c.verdict = c.min > 0.0 ? Verdict::Pass : Verdict::Fail;
    rep.checks.push_back(c);
  }
  rep.checks.push_back(bound_check("h1_flux_positive_on_D2", column([](const CaseBPoint& p) { return p.d2_sign; }),
                                   own, opt.sign_tolerance, "max over dD2 of -d(nu)h1 / scale, must be <= 0"));
  rep.checks.push_back(bound_check("h1_flux_below_pair_on_D2", column([](const CaseBPoint& p) { return p.d2_pair; }),
                                   own, opt.sign_tolerance,
                                   "max over dD2 of (d(nu)h1 - d(nu)Psi[D1,D2]) / scale, must be <= 0"));
  rep.checks.push_back(bound_check("h1_flux_nonnegative_on_D3", column([](const CaseBPoint& p) { return p.d3_sign; }),
                                   own, opt.sign_tolerance, "max over dD3 of -d(nu)h1 / scale, must be <= 0"));
  rep.checks.push_back(spread_check("h1_flux_on_D3_over_sqrt_eps1",
                                    column([](const CaseBPoint& p) { return p.d3_flux / std::sqrt(p.eps1); }), own,
                                    opt.spread_limit, "max over dD3 of d(nu)h1, divided by sqrt(eps1)"));
  rep.checks.push_back(bound_check("h1_flux_negative_on_D1", column([](const CaseBPoint& p) { return p.d1_sign; }),
                                   own, opt.sign_tolerance, "max over dD1 of d(nu)h1 / scale, must be <= 0"));
  {
    auto v = column([](const CaseBPoint& p) { return p.d4_ratio_min; });
    LemmaCheck c = info_check("h1_flux_vs_D4_on_D1", v, own,
                              "min over dD1 of d(nu)h1 / d(nu)Psi[D1,D4] (D4 radius 1.75 r3), must be > 0");
    c.verdict = c.min > 0.0 ? Verdict::Pass : Verdict::Fail;
    rep.checks.push_back(c);
  }
  rep.checks.push_back(bound_check("h1_above_D4", column([](const CaseBPoint& p) { return p.h1_vs_d4; }), own,
                                   opt.sign_tolerance, "(Psi[D1,D4] diff - h1 diff) / h1 diff, must be <= 0"));
  rep.checks.push_back(spread_check("weighted_flux_over_sqrt_eps1",
                                    column([](const CaseBPoint& p) { return p.weighted_flux / std::sqrt(p.eps1); }),
                                    own, opt.spread_limit, "|sum_i int_dDi H d(nu)h1| / sqrt(eps1)"));
  rep.checks.push_back(spread_check("grad_h1_gap1_times_sqrt_eps1",
                                    column([](const CaseBPoint& p) { return p.grad_h1_gap1 * std::sqrt(p.eps1); }),
                                    own, opt.spread_limit, "max |grad h1| between D1 and D2, times sqrt(eps1)"));
  // O(sqrt eps) constants measured in units of the same solution's leading constant
  rep.checks.push_back(bound_check(
      "grad_h2_gap1_over_sqrt_eps2",
      column([](const CaseBPoint& p) { return p.grad_h2_gap1 / std::sqrt(p.eps2) / (p.grad_h2_gap2 * std::sqrt(p.eps2)); }),
      own, opt.spread_limit,
      "max |grad h2| between D1 and D2 over sqrt(eps2), relative to max |grad h2| between D2 and D3 times sqrt(eps2)"));
  rep.checks.push_back(bound_check(
      "grad_h1_gap2_over_sqrt_eps1",
      column([](const CaseBPoint& p) { return p.grad_h1_gap2 / std::sqrt(p.eps1) / (p.grad_h1_gap1 * std::sqrt(p.eps1)); }),
      own, opt.spread_limit,
      "max |grad h1| between D2 and D3 over sqrt(eps1), relative to max |grad h1| between D1 and D2 times sqrt(eps1)"));
  rep.checks.push_back(spread_check("grad_h2_gap2_times_sqrt_eps2",
                                    column([](const CaseBPoint& p) { return p.grad_h2_gap2 * std::sqrt(p.eps2); }),
                                    own, opt.spread_limit, "max |grad h2| between D2 and D3, times sqrt(eps2)"));
  rep.checks.push_back(spread_check("h1_difference_over_sqrt_eps1",
                                    column([](const CaseBPoint& p) { return p.h1_diff / std::sqrt(p.eps1); }), own,
                                    opt.spread_limit, "h1|dD2 - h1|dD1 divided by sqrt(eps1)"));
  rep.checks.push_back(spread_check("h2_difference_over_sqrt_eps2",
                                    column([](const CaseBPoint& p) { return p.h2_diff / std::sqrt(p.eps2); }), own,
                                    opt.spread_limit, "h2|dD3 - h2|dD2 divided by sqrt(eps2)"));
  {
    auto c1 = column([](const CaseBPoint& p) { return p.c1; });
    auto c2 = column([](const CaseBPoint& p) { return p.c2; });
    std::vector<double> both = c1;
    both.insert(both.end(), c2.begin(), c2.end());
    LemmaCheck c = info_check("representation_coefficients", c1, own, "c1 over the sweep (c2 in note)");
    double lo = *std::min_element(both.begin(), both.end()), hi = *std::max_element(both.begin(), both.end());
    bool same_sign = lo > 0.0 || hi < 0.0;
    double band = std::max(std::abs(hi), std::abs(lo)) / std::min(std::abs(hi), std::abs(lo));
    c.verdict = same_sign && band <= opt.spread_limit ? Verdict::Pass : Verdict::Fail;
    std::ostringstream os;
    os << "c1 in [" << *std::min_element(c1.begin(), c1.end()) << ", " << *std::max_element(c1.begin(), c1.end())
       << "], c2 in [" << *std::min_element(c2.begin(), c2.end()) << ", " << *std::max_element(c2.begin(), c2.end())
       << "]: bounded independently of the gaps";
    c.note = os.str();
    rep.checks.push_back(c);
  }
  return rep;
}

// ---- Case D: lower-bound scale with r1 and with r2, side by side

inline LemmaReport lemma_suite_d(const Configuration& cfg, const MeshControls& mc, const LemmaOptions&) {
  LemmaReport rep;
  rep.tag = CaseTag::D;
  rep.sweep = {cfg.param("eps1")};
  auto op = assemble(cfg.bodies, mc);
  auto h1 = solve_h(op, {0}, {1, 2});
  auto H = [&](Vec2 x) { return cfg.background.value(x); };
  double lower = bodies_flux_weighted(h1, {0}, H);
  double e1 = cfg.param("eps1"), r2 = cfg.param("r2");
  double r1 = 0.5 * body_diameter(cfg.bodies[0]);
  rep.checks.push_back(info_check("d1_weighted_flux_over_sqrt_eps1_r1", {lower / std::sqrt(e1 / r1)}, 0,
                                  "int_dD1 H d(nu)h1 / sqrt(eps1 / r1), r1 = half the diameter of D1"));
  rep.checks.push_back(info_check("d1_weighted_flux_over_sqrt_eps1_r2", {lower / std::sqrt(e1 / r2)}, 0,
                                  "int_dD1 H d(nu)h1 / sqrt(eps1 / r2)"));
  return rep;
}

}  // namespace detail

/// Runs the diagnostics matching the configuration's case, plus solution health checks.
inline LemmaReport lemma_suite(const Configuration& cfg, const MeshControls& mc = {}, const LemmaOptions& opt = {}) {
  LemmaReport rep;
  switch (cfg.tag) {
    case CaseTag::A: rep = detail::lemma_suite_a(cfg, mc, opt); break;
    case CaseTag::B: rep = detail::lemma_suite_b(cfg, mc, opt); break;
    case CaseTag::D: rep = detail::lemma_suite_d(cfg, mc, opt); break;
    default: fail(ErrorKind::InvalidUsage, std::string("no lemma diagnostics for case ") + to_string(cfg.tag));
  }
  detail::health_checks(solve_u(cfg, mc), opt, rep.checks);
  return rep;
}

inline void write_report_csv(std::ostream& os, const LemmaReport& rep) {
  os << std::setprecision(10);
  os << "check,ratio,min,max,verdict\n";
  for (const auto& c : rep.checks)
    os << c.name << ',' << c.ratio << ',' << c.min << ',' << c.max << ',' << to_string(c.verdict) << '\n';
  os << "# case=" << to_string(rep.tag) << " sweep=";
  for (std::size_t k = 0; k < rep.sweep.size(); ++k) os << (k ? ";" : "") << rep.sweep[k];
  os << '\n';
  for (const auto& c : rep.checks) os << "# " << c.name << ": " << c.note << '\n';
}

}  // namespace gapfield
