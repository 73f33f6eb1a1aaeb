#pragma once

// Single-layer boundary integral solver for the exterior conductor problems.
//
// Fields are represented as w = B + S[sigma] with S[sigma](x) = int G(x, y) sigma(y) ds_y,
// G = log|x - y| / (2 pi), and B the harmonic background (H, or zero for h-problems).
// Bodies of one equipotential group share an unknown constant. Since the interior field is
// constant, the exterior normal derivative along n (out of the body) equals sigma, so with
// the inward normal nu of the flux convention, d(nu) w = -sigma and the flux through a body
// boundary is minus its total charge. Prescribing the charge per group therefore imposes
// the flux conditions directly and completes the log-kernel system.

#include <Eigen/Dense>
#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>

#include "gapfield/mesh.hpp"

namespace gapfield {

enum class Problem { U, H, Hc };

inline const char* to_string(Problem p) {
  switch (p) {
    case Problem::U: return "u";
    case Problem::H: return "h";
    case Problem::Hc: return "Hc";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Panel quadrature

namespace detail {

struct LogKernel {
  Vec2 x;
  double operator()(Vec2 y) const { return std::log(distance(x, y)) / kTwoPi; }
  // int_0^l log(s) ds / (2 pi) and int_0^l s log(s) ds / (2 pi)
  static double tail(double l) { return l * (std::log(l) - 1.0) / kTwoPi; }
  static double tail1(double l) { return 0.5 * l * l * (std::log(l) - 0.5) / kTwoPi; }
};

struct GradKernel {
  Vec2 x;
  Vec2 operator()(Vec2 y) const {
    Vec2 r = x - y;
    return r / (kTwoPi * dot(r, r));
  }
  static Vec2 tail(double) { fail(ErrorKind::DomainError, "gradient requested on the boundary"); }
  static Vec2 tail1(double) { return {}; }
};

template <class V, class Kernel>
void accumulate(const Mesh& m, const Panel& p, const Kernel& kernel, double a, double b, int singular_side,
                double s0, std::array<V, kPanelOrder>& out, int depth) {
  const auto& gl = GaussLegendre::instance();
  const Shape& shape = m.arcs[p.arc].shape;
  double ht = 0.5 * (p.t1 - p.t0), hs = 0.5 * (b - a), ms = 0.5 * (a + b);
  // stop well above the rounding level of the curve parameter
  bool tiny = b - a < 1e-9 || (b - a) * ht < 1e-12 * std::max(1.0, std::abs(p.t0) + std::abs(p.t1));
  if (singular_side != 0 && tiny) {
    // density linear in arclength from the singular point, curve straight
    double speed = curve_speed(shape, p.t0 + ht * (s0 + 1.0)) * ht;
    double l = speed * (b - a);
    double h = 1e-6;
    auto basis = gl.basis(s0);
    auto up = gl.basis(std::min(s0 + h, 1.0)), dn = gl.basis(std::max(s0 - h, -1.0));
    double span = std::min(s0 + h, 1.0) - std::max(s0 - h, -1.0);
    V v0 = Kernel::tail(l), v1 = Kernel::tail1(l);
    double dir = singular_side < 0 ? 1.0 : -1.0;  // reference coordinate grows away from s0 when singular at a
    for (std::size_t k = 0; k < kPanelOrder; ++k) {
      double slope = (up[k] - dn[k]) / span / speed;
      out[k] += basis[k] * v0 + dir * slope * v1;
    }
    return;
  }
  std::array<Vec2, kPanelOrder> y;
  std::array<double, kPanelOrder> ds, xi;
  double len = 0.0, dmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kPanelOrder; ++k) {
    xi[k] = ms + hs * gl.nodes[k];
    double t = p.t0 + ht * (xi[k] + 1.0);
    y[k] = curve_point(shape, t);
    ds[k] = curve_speed(shape, t) * ht * hs * gl.weights[k];
    len += ds[k];
    dmin = std::min(dmin, distance(y[k], kernel.x));
  }
  if (singular_side == 0 && (dmin >= 0.75 * len || depth >= 60 || tiny)) {
    for (std::size_t j = 0; j < kPanelOrder; ++j) {
      if (y[j] == kernel.x) continue;
      V kv = kernel(y[j]) * ds[j];
      auto basis = gl.basis(xi[j]);
      for (std::size_t k = 0; k < kPanelOrder; ++k) out[k] += basis[k] * kv;
    }
    return;
  }
  double mid = ms;
  if (singular_side < 0) {  // singular at a
    accumulate<V>(m, p, kernel, a, mid, -1, s0, out, depth + 1);
    accumulate<V>(m, p, kernel, mid, b, 0, s0, out, depth + 1);
  } else if (singular_side > 0) {  // singular at b
    accumulate<V>(m, p, kernel, a, mid, 0, s0, out, depth + 1);
    accumulate<V>(m, p, kernel, mid, b, +1, s0, out, depth + 1);
  } else {
    accumulate<V>(m, p, kernel, a, mid, 0, s0, out, depth + 1);
    accumulate<V>(m, p, kernel, mid, b, 0, s0, out, depth + 1);
  }
}

inline bool is_near(const Panel& p, Vec2 x, double near_factor) {
  return distance(x, p.center) - p.radius < near_factor * p.length;
}

/// Product weights of the log kernel: int G(x, y) L_k(y) ds for each panel basis function.
/// `s0` marks x as the panel point at that reference coordinate.
inline std::array<double, kPanelOrder> log_weights(const Mesh& m, const Panel& p, Vec2 x, double near_factor,
                                                   std::optional<double> s0 = std::nullopt) {
  std::array<double, kPanelOrder> out{};
  LogKernel k{x};
  if (s0) {
    if (*s0 > -1.0) accumulate<double>(m, p, k, -1.0, *s0, +1, *s0, out, 0);
    if (*s0 < 1.0) accumulate<double>(m, p, k, *s0, 1.0, -1, *s0, out, 0);
  } else if (is_near(p, x, near_factor)) {
    accumulate<double>(m, p, k, -1.0, 1.0, 0, 0.0, out, 0);
  } else {
    for (std::size_t j = 0; j < kPanelOrder; ++j) out[j] = k(m.x[p.first + j]) * m.w[p.first + j];
  }
  return out;
}

inline std::array<Vec2, kPanelOrder> grad_weights(const Mesh& m, const Panel& p, Vec2 x, double near_factor) {
  std::array<Vec2, kPanelOrder> out{};
  GradKernel k{x};
  if (is_near(p, x, near_factor)) {
    accumulate<Vec2>(m, p, k, -1.0, 1.0, 0, 0.0, out, 0);
  } else {
    for (std::size_t j = 0; j < kPanelOrder; ++j) out[j] = k(m.x[p.first + j]) * m.w[p.first + j];
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Solutions

/// Boundary density and constants of one solved exterior problem.
struct ExteriorSolution {
  Problem problem = Problem::U;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const std::vector<Body>> bodies;
  std::vector<std::vector<int>> groups;   ///< equipotential groups of body indices
  std::vector<double> constants;          ///< boundary constant per group
  std::vector<double> sigma;              ///< density at mesh nodes
  HarmonicBackground background;          ///< empty for h-problems
  MeshControls controls;
  double condition = 0.0;

  int group_of(int body) const {
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (int b : groups[g])
        if (b == body) return static_cast<int>(g);
    return -1;
  }
  /// Total charge (sum of w sigma) on one body.
  double body_charge(int body) const {
    double q = 0.0;
    for (std::size_t i = 0; i < mesh->size(); ++i)
      if (mesh->body[i] == body) q += mesh->w[i] * sigma[i];
    return q;
  }
};

namespace detail {

// LU of the bare single-layer block, computed once and shared by every problem on the operator.
struct LazyLU {
  std::once_flag flag;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double condition = 0.0;
};

}  // namespace detail

/// Assembled single-layer matrix, column-scaled: entry (i, j) multiplies the node charge w_j sigma_j.
struct SingleLayerOperator {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const std::vector<Body>> bodies;
  Eigen::MatrixXd matrix;
  MeshControls controls;
  std::shared_ptr<detail::LazyLU> cache = std::make_shared<detail::LazyLU>();
};

inline SingleLayerOperator assemble(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const std::vector<Body>> bodies,
                                    const MeshControls& mc) {
  const Mesh& m = *mesh;
  std::size_t n = m.size();
  SingleLayerOperator op{mesh, std::move(bodies), Eigen::MatrixXd(n, n), mc, std::make_shared<detail::LazyLU>()};
  const auto& gl = GaussLegendre::instance();
  parallel_for(n, mc.threads, [&](std::size_t i) {
    int own = m.panel_of[i];
    for (std::size_t q = 0; q < m.panels.size(); ++q) {
      const Panel& p = m.panels[q];
      std::optional<double> s0;
      if (static_cast<int>(q) == own) s0 = gl.nodes[i - p.first];
      auto wts = detail::log_weights(m, p, m.x[i], mc.near_factor, s0);
      for (std::size_t k = 0; k < kPanelOrder; ++k) op.matrix(i, p.first + k) = wts[k] / m.w[p.first + k];
    }
  });
  return op;
}

inline SingleLayerOperator assemble(const std::vector<Body>& bodies, const MeshControls& mc) {
  auto b = std::make_shared<const std::vector<Body>>(bodies);
  auto mesh = std::make_shared<const Mesh>(build_mesh(bodies, mc));
  return assemble(mesh, b, mc);
}

namespace detail {

inline double condition_of(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  double rc = lu.rcond();
  return rc > 0.0 && std::isfinite(rc) ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

inline void check_condition(double condition, const MeshControls& mc) {
  if (!(condition <= mc.condition_limit)) {
    std::ostringstream os;
    os << "linear system condition estimate " << condition << " exceeds " << mc.condition_limit;
    fail(ErrorKind::NumericFailure, os.str());
  }
}

inline Eigen::PartialPivLU<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& a, const MeshControls& mc,
                                                      double& condition) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  condition = condition_of(lu);
  check_condition(condition, mc);
  return lu;
}

inline const LazyLU& operator_lu(const SingleLayerOperator& op) {
  std::call_once(op.cache->flag, [&] {
    op.cache->lu.compute(op.matrix);
    op.cache->condition = condition_of(op.cache->lu);
  });
  return *op.cache;
}

}  // namespace detail

/// Solves for S[sigma] + background = constant per group with prescribed group charges.
inline ExteriorSolution solve_with(const SingleLayerOperator& op, Problem problem,
                                   const std::vector<std::vector<int>>& groups, const std::vector<double>& charges,
                                   const HarmonicBackground& background) {
  const Mesh& m = *op.mesh;
  std::size_t n = m.size(), ng = groups.size();
  std::vector<int> group_of_body(m.body_count, -1);
  for (std::size_t g = 0; g < ng; ++g)
    for (int b : groups[g]) {
      if (b < 0 || b >= m.body_count) fail(ErrorKind::InvalidUsage, "group references unknown body");
      if (group_of_body[b] != -1) fail(ErrorKind::InvalidUsage, "body listed in two groups");
      group_of_body[b] = static_cast<int>(g);
    }
  for (int g : group_of_body)
    if (g < 0) fail(ErrorKind::InvalidUsage, "groups must cover every body");

  // rows: S q - C_g = -B(x_i); charge rows: sum of q over group g = Q_g
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, ng);
  Eigen::VectorXd r(n), q_target(ng);
  for (std::size_t i = 0; i < n; ++i) {
    e(i, group_of_body[m.body[i]]) = 1.0;
    r(i) = -background.value(m.x[i]);
  }
  for (std::size_t g = 0; g < ng; ++g) q_target(g) = charges[g];

  ExteriorSolution sol;
  sol.problem = problem;
  sol.mesh = op.mesh;
  sol.bodies = op.bodies;
  sol.groups = groups;
  sol.background = background;
  sol.controls = op.controls;
  Eigen::VectorXd q, c;
  const auto& cache = detail::operator_lu(op);
  if (cache.condition <= op.controls.condition_limit) {
    // bordered elimination: q = S^-1 (r + E C), then E^T q = Q fixes C
    Eigen::MatrixXd y = cache.lu.solve(e);
    Eigen::PartialPivLU<Eigen::MatrixXd> small(e.transpose() * y);
    double cs = detail::condition_of(small);
    sol.condition = std::max(cache.condition, cs);
    detail::check_condition(cs, op.controls);
    auto bordered = [&](const Eigen::VectorXd& top, const Eigen::VectorXd& bottom, Eigen::VectorXd& dq,
                        Eigen::VectorXd& dc) {
      Eigen::VectorXd y0 = cache.lu.solve(top);
      dc = small.solve(bottom - e.transpose() * y0);
      dq = y0 + y * dc;
    };
    bordered(r, q_target, q, c);
    // refinement against the full bordered residual recovers what the elimination loses
    for (int it = 0; it < 3; ++it) {
      Eigen::VectorXd rt = r - (op.matrix * q - e * c);
      Eigen::VectorXd rb = q_target - e.transpose() * q;
      Eigen::VectorXd dq, dc;
      bordered(rt, rb, dq, dc);
      q += dq;
      c += dc;
    }
  } else {
    // log-capacity degeneracy of the bare block: factor the full augmented system
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + ng, n + ng);
    a.topLeftCorner(n, n) = op.matrix;
    a.topRightCorner(n, ng) = -e;
    a.bottomLeftCorner(ng, n) = e.transpose();
    Eigen::VectorXd rhs(n + ng);
    rhs << r, q_target;
    auto lu = detail::factorize(a, op.controls, sol.condition);
    Eigen::VectorXd z = lu.solve(rhs);
    q = z.head(n);
    c = z.tail(ng);
  }
  sol.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.sigma[i] = q(i) / m.w[i];
  for (std::size_t g = 0; g < ng; ++g) sol.constants.push_back(c(g));
  return sol;
}

inline std::vector<std::vector<int>> all_bodies_group(std::size_t n) {
  std::vector<int> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = static_cast<int>(i);
  return {all};
}

inline ExteriorSolution solve_u(const SingleLayerOperator& op, const Configuration& cfg) {
  return solve_with(op, Problem::U, cfg.conductors, std::vector<double>(cfg.conductors.size(), 0.0), cfg.background);
}

/// u = H + S[sigma]: constant C_l and zero flux on every conductor.
inline ExteriorSolution solve_u(const Configuration& cfg, const MeshControls& mc = {}) {
  return solve_u(assemble(cfg.bodies, mc), cfg);
}

inline ExteriorSolution solve_h(const SingleLayerOperator& op, const std::vector<int>& group_a,
                                const std::vector<int>& group_b) {
  // flux -1 through the first group, +1 through the second (inward normals)
  return solve_with(op, Problem::H, {group_a, group_b}, {1.0, -1.0}, HarmonicBackground{});
}

/// Psi[A, B]: body groups A and B as equipotential conductors with fluxes -1 and +1.
inline ExteriorSolution solve_h(const Configuration& cfg, const std::vector<int>& group_a,
                                const std::vector<int>& group_b, const MeshControls& mc = {}) {
  return solve_h(assemble(cfg.bodies, mc), group_a, group_b);
}

inline ExteriorSolution solve_Hc(const SingleLayerOperator& op, const Configuration& cfg) {
  return solve_with(op, Problem::Hc, all_bodies_group(cfg.bodies.size()), {0.0}, cfg.background);
}

/// H^c: one constant C_H on all bodies, zero total flux, H^c - H = O(1/|x|).
inline ExteriorSolution solve_Hc(const Configuration& cfg, const MeshControls& mc = {}) {
  return solve_Hc(assemble(cfg.bodies, mc), cfg);
}

// ---------------------------------------------------------------------------
// Evaluation

inline void require_exterior(const ExteriorSolution& sol, Vec2 x) {
  for (std::size_t b = 0; b < sol.bodies->size(); ++b)
    if ((*sol.bodies)[b].signed_distance(x) <= 0.0)
      fail(ErrorKind::DomainError, "evaluation point lies in body " + std::to_string(b));
}

/// Single-layer potential of the solution density at any point off the boundary.
inline double layer_potential(const Mesh& m, const std::vector<double>& sigma, Vec2 x, double near_factor) {
  double acc = 0.0;
  for (const auto& p : m.panels) {
    auto wts = detail::log_weights(m, p, x, near_factor);
    for (std::size_t k = 0; k < kPanelOrder; ++k) acc += wts[k] * sigma[p.first + k];
  }
  return acc;
}

inline Vec2 layer_gradient(const Mesh& m, const std::vector<double>& sigma, Vec2 x, double near_factor) {
  Vec2 acc;
  for (const auto& p : m.panels) {
    auto wts = detail::grad_weights(m, p, x, near_factor);
    for (std::size_t k = 0; k < kPanelOrder; ++k) acc += sigma[p.first + k] * wts[k];
  }
  return acc;
}

inline double eval_potential(const ExteriorSolution& sol, Vec2 x) {
  require_exterior(sol, x);
  return sol.background.value(x) + layer_potential(*sol.mesh, sol.sigma, x, sol.controls.near_factor);
}

inline Vec2 eval_gradient(const ExteriorSolution& sol, Vec2 x) {
  require_exterior(sol, x);
  return sol.background.gradient(x) + layer_gradient(*sol.mesh, sol.sigma, x, sol.controls.near_factor);
}

/// Field value at a boundary point given by panel index and reference coordinate.
inline double boundary_potential(const ExteriorSolution& sol, std::size_t panel, double s) {
  const Mesh& m = *sol.mesh;
  const Panel& own = m.panels[panel];
  const Shape& shape = m.arcs[own.arc].shape;
  Vec2 x = curve_point(shape, own.t0 + 0.5 * (own.t1 - own.t0) * (s + 1.0));
  double acc = sol.background.value(x);
  for (std::size_t q = 0; q < m.panels.size(); ++q) {
    std::optional<double> s0;
    if (q == panel) s0 = s;
    auto wts = detail::log_weights(m, m.panels[q], x, sol.controls.near_factor, s0);
    for (std::size_t k = 0; k < kPanelOrder; ++k) acc += wts[k] * sol.sigma[m.panels[q].first + k];
  }
  return acc;
}

/// Density interpolated at curve parameter t of a body part.
inline double density_at(const ExteriorSolution& sol, int body, int part, double t) {
  const Mesh& m = *sol.mesh;
  int best_arc = -1;
  for (std::size_t a = 0; a < m.arcs.size(); ++a) {
    if (m.arc_body[a] != body || m.arcs[a].part != part) continue;
    const Arc& arc = m.arcs[a];
    double tt = arc.t_begin + wrap_angle(t - arc.t_begin);
    if (arc.closed || tt <= arc.t_end + 1e-12 || best_arc < 0) best_arc = static_cast<int>(a);
  }
  if (best_arc < 0) fail(ErrorKind::InvalidUsage, "no boundary arc for the requested point");
  const Arc& arc = m.arcs[best_arc];
  double tt = arc.t_begin + wrap_angle(t - arc.t_begin);
  int pi = m.find_panel(best_arc, tt);
  const Panel& p = m.panels[pi];
  auto basis = GaussLegendre::instance().basis(m.reference(p, tt));
  double v = 0.0;
  for (std::size_t k = 0; k < kPanelOrder; ++k) v += basis[k] * sol.sigma[p.first + k];
  return v;
}

// ---------------------------------------------------------------------------
// Fluxes (normal nu pointing into the inclusions)

/// Flux int d(nu) w dS over the boundary of one body.
inline double body_flux(const ExteriorSolution& sol, int body) { return -sol.body_charge(body); }

/// Flux over all boundaries of one equipotential group.
inline double boundary_flux(const ExteriorSolution& sol, int group) {
  if (group < 0 || group >= static_cast<int>(sol.groups.size()))
    fail(ErrorKind::InvalidUsage, "group index out of range");
  double f = 0.0;
  for (int b : sol.groups[group]) f += body_flux(sol, b);
  return f;
}

/// int f d(nu) w dS over the boundaries of the given bodies.
template <class F>
double bodies_flux_weighted(const ExteriorSolution& sol, const std::vector<int>& bodies, F&& f) {
  const Mesh& m = *sol.mesh;
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (std::find(bodies.begin(), bodies.end(), m.body[i]) != bodies.end())
      acc -= m.w[i] * f(m.x[i]) * sol.sigma[i];
  return acc;
}

template <class F>
double boundary_flux_weighted(const ExteriorSolution& sol, int group, F&& f) {
  if (group < 0 || group >= static_cast<int>(sol.groups.size()))
    fail(ErrorKind::InvalidUsage, "group index out of range");
  return bodies_flux_weighted(sol, sol.groups[group], std::forward<F>(f));
}

struct FluxCheck {
  std::vector<double> measured;   ///< per group, flux of grad w through a grown contour (inward sign)
  std::vector<double> expected;   ///< per group, the imposed flux
  std::vector<double> residual;   ///< |measured - expected| / (int |sigma| dS over the group, floored)
  double max_residual = 0.0;
};

/// Independent flux quadrature: integrates grad w . nu over contours offset by a quarter of
/// the smallest gap and compares with the imposed group fluxes.
inline FluxCheck flux_check(const ExteriorSolution& sol) {
  const auto& bodies = *sol.bodies;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < bodies.size(); ++i)
    for (std::size_t j = i + 1; j < bodies.size(); ++j) min_gap = std::min(min_gap, body_gap(bodies[i], bodies[j]).distance);
  if (!std::isfinite(min_gap)) min_gap = shape_scale(bodies[0].parts()[0]);
  double delta = 0.25 * min_gap;
  std::vector<Body> grown_bodies;
  for (const auto& b : bodies) grown_bodies.push_back(grown_body(b, delta));
  Mesh g = build_mesh(grown_bodies, sol.controls);
  std::vector<double> contrib(g.size());
  parallel_for(g.size(), sol.controls.threads, [&](std::size_t i) {
    Vec2 grad = sol.background.gradient(g.x[i]) + layer_gradient(*sol.mesh, sol.sigma, g.x[i], sol.controls.near_factor);
    contrib[i] = -g.w[i] * dot(grad, g.normal[i]);
  });
  FluxCheck out;
  const Mesh& m = *sol.mesh;
  for (std::size_t grp = 0; grp < sol.groups.size(); ++grp) {
    double meas = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (sol.group_of(g.body[i]) == static_cast<int>(grp)) meas += contrib[i];
    for (std::size_t i = 0; i < m.size(); ++i)
      if (sol.group_of(m.body[i]) == static_cast<int>(grp)) scale += m.w[i] * std::abs(sol.sigma[i]);
    double expect = boundary_flux(sol, static_cast<int>(grp));
    double res = std::abs(meas - expect) / std::max(scale, 1e-300);
    if (scale == 0.0) res = std::abs(meas - expect);
    out.measured.push_back(meas);
    out.expected.push_back(expect);
    out.residual.push_back(res);
    out.max_residual = std::max(out.max_residual, res);
  }
  return out;
}

/// Largest deviation of the field from its group constant at off-node boundary points,
/// relative to the largest difference between group constants (floored at 1e-12).
inline double constancy_residual(const ExteriorSolution& sol) {
  const Mesh& m = *sol.mesh;
  std::vector<double> dev(m.panels.size());
  parallel_for(m.panels.size(), sol.controls.threads, [&](std::size_t p) {
    double d = 0.0;
    int g = sol.group_of(m.panels[p].body);
    for (double s : {-0.55, 0.05, 0.65}) d = std::max(d, std::abs(boundary_potential(sol, p, s) - sol.constants[g]));
    dev[p] = d;
  });
  double spread = 0.0;
  for (double a : sol.constants)
    for (double b : sol.constants) spread = std::max(spread, std::abs(a - b));
  return *std::max_element(dev.begin(), dev.end()) / std::max(spread, 1e-12);
}

// ---------------------------------------------------------------------------
// Gap gradients

struct GapGradient {
  double value = 0.0;  ///< max |grad w| on the neck segment
  Vec2 point;          ///< where it is attained
  double fraction = 0.0;
};

/// Max of |grad w| over the neck segment: boundary endpoints from the density (|grad w| = |sigma|
/// on a conductor), Chebyshev interior samples, golden-section refinement around the best one.
inline GapGradient max_gap_gradient(const ExteriorSolution& sol, const GapInfo& g, std::size_t samples = 33) {
  if (g.body_a < 0 || g.body_b < 0) fail(ErrorKind::InvalidUsage, "gap info lacks body indices");
  Vec2 a = g.point_a, b = g.point_b;
  auto f = [&](double s) {
    if (s <= 0.0) return std::abs(density_at(sol, g.body_a, g.part_a, g.t_a));
    if (s >= 1.0) return std::abs(density_at(sol, g.body_b, g.part_b, g.t_b));
    return norm(eval_gradient(sol, a + std::clamp(s, 1e-4, 1.0 - 1e-4) * (b - a)));
  };
  std::vector<double> s{0.0};
  for (double c : chebyshev_unit(samples)) s.push_back(c);
  s.push_back(1.0);
  std::vector<double> v(s.size());
  parallel_for(s.size(), sol.controls.threads, [&](std::size_t i) { v[i] = f(s[i]); });
  std::size_t k = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  double lo = s[k == 0 ? 0 : k - 1], hi = s[std::min(k + 1, s.size() - 1)];
  double best_s = s[k], best_v = v[k];
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 40 && hi - lo > 1e-12; ++it) {
    if (f1 > f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - r * (hi - lo); f1 = f(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + r * (hi - lo); f2 = f(x2);
    }
  }
  for (auto [sx, fx] : {std::pair{x1, f1}, std::pair{x2, f2}})
    if (fx > best_v) { best_v = fx; best_s = sx; }
  return {best_v, a + best_s * (b - a), best_s};
}

// ---------------------------------------------------------------------------
// Representation u = H^c + c1 h1 + c2 h2 for three conductors

struct Representation {
  double c1 = 0.0, c2 = 0.0;
  std::array<std::array<double, 2>, 2> matrix{};
  std::array<double, 2> rhs{};
  ExteriorSolution h1, h2, Hc;
};

inline Representation representation_coeffs(const SingleLayerOperator& op, const Configuration& cfg) {
  if (cfg.conductors.size() != 3) fail(ErrorKind::InvalidUsage, "representation needs exactly three conductors");
  const auto& c = cfg.conductors;
  auto join = [](std::vector<int> x, const std::vector<int>& y) {
    x.insert(x.end(), y.begin(), y.end());
    return x;
  };
  Representation r;
  r.h1 = solve_h(op, c[0], join(c[1], c[2]));
  r.h2 = solve_h(op, join(c[0], c[1]), c[2]);
  r.Hc = solve_Hc(op, cfg);
  auto flux = [&](const ExteriorSolution& s, const std::vector<int>& bodies) {
    double f = 0.0;
    for (int b : bodies) f += body_flux(s, b);
    return f;
  };
  r.matrix = {{{flux(r.h1, c[0]), flux(r.h2, c[0])}, {flux(r.h1, c[1]), flux(r.h2, c[1])}}};
  r.rhs = {flux(r.Hc, c[0]), flux(r.Hc, c[1])};
  double det = r.matrix[0][0] * r.matrix[1][1] - r.matrix[0][1] * r.matrix[1][0];
  if (!(std::abs(det) > 1e-14)) {
    std::ostringstream os;
    os << "singular coefficient matrix [[" << r.matrix[0][0] << ", " << r.matrix[0][1] << "], [" << r.matrix[1][0]
       << ", " << r.matrix[1][1] << "]]";
    fail(ErrorKind::NumericFailure, os.str());
  }
  r.c1 = -(r.matrix[1][1] * r.rhs[0] - r.matrix[0][1] * r.rhs[1]) / det;
  r.c2 = -(-r.matrix[1][0] * r.rhs[0] + r.matrix[0][0] * r.rhs[1]) / det;
  return r;
}

inline Representation representation_coeffs(const Configuration& cfg, const MeshControls& mc = {}) {
  return representation_coeffs(assemble(cfg.bodies, mc), cfg);
}

inline double eval_representation(const Representation& r, Vec2 x) {
  return eval_potential(r.Hc, x) + r.c1 * eval_potential(r.h1, x) + r.c2 * eval_potential(r.h2, x);
}

// ---------------------------------------------------------------------------
// Decomposition u = C0 + v0 + C1 v1 + C3 v3 inside an enclosing disk D0

/// Harmonic function in D0 minus the bodies, represented as S[sigma] + constant.
struct InteriorField {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const std::vector<Body>> bodies;
  Disk outer;
  std::vector<double> sigma;
  double constant = 0.0;
  double near_factor = 5.0;

  void require_inside(Vec2 x) const {
    if (distance(x, outer.center) >= outer.radius) fail(ErrorKind::DomainError, "point outside the enclosing disk");
    for (const auto& b : *bodies)
      if (b.signed_distance(x) <= 0.0) fail(ErrorKind::DomainError, "point inside a body");
  }
  double value(Vec2 x) const {
    require_inside(x);
    return constant + layer_potential(*mesh, sigma, x, near_factor);
  }
  Vec2 gradient(Vec2 x) const {
    require_inside(x);
    return layer_gradient(*mesh, sigma, x, near_factor);
  }
};

struct Decomposition {
  double C0 = 0.0, C1 = 0.0, C3 = 0.0;
  InteriorField v0, v1, v3;
  double residual = 0.0;     ///< max |u - reconstruction| over probes, relative to max |u - C0|
  std::vector<Vec2> probes;
};

inline double body_diameter(const Body& b) {
  std::vector<Vec2> pts;
  for (const auto& arc : b.arcs())
    for (int i = 0; i <= 64; ++i) pts.push_back(curve_point(arc.shape, arc.t_begin + (arc.t_end - arc.t_begin) * i / 64.0));
  double d = 0.0;
  for (auto& p : pts)
    for (auto& q : pts) d = std::max(d, distance(p, q));
  return d;
}

/// Smallest admissible enclosing disk: centered on the bodies' bounding box with clearance
/// 2.5 times the largest body diameter.
inline Disk default_enclosing_disk(const Configuration& cfg) {
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
  double diam = 0.0;
  for (const auto& b : cfg.bodies) {
    diam = std::max(diam, body_diameter(b));
    for (const auto& arc : b.arcs())
      for (int i = 0; i <= 128; ++i) {
        Vec2 p = curve_point(arc.shape, arc.t_begin + (arc.t_end - arc.t_begin) * i / 128.0);
        lo_x = std::min(lo_x, p.x); hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y); hi_y = std::max(hi_y, p.y);
      }
  }
  Vec2 c{0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y)};
  double reach = 0.5 * std::hypot(hi_x - lo_x, hi_y - lo_y);
  return Disk{c, reach + 2.5 * diam};
}

inline Decomposition decompose_u(const ExteriorSolution& u, const Configuration& cfg, const Disk& d0,
                                 std::uint64_t seed = 1) {
  if (cfg.conductors.size() != 3) fail(ErrorKind::InvalidUsage, "decomposition needs exactly three conductors");
  if (u.problem != Problem::U) fail(ErrorKind::InvalidUsage, "decomposition needs a u-problem solution");
  double diam = 0.0, reach = 0.0;
  for (const auto& b : cfg.bodies) {
    diam = std::max(diam, body_diameter(b));
    for (const auto& arc : b.arcs())
      for (int i = 0; i <= 128; ++i)
        reach = std::max(reach, distance(curve_point(arc.shape, arc.t_begin + (arc.t_end - arc.t_begin) * i / 128.0), d0.center));
  }
  if (d0.radius - reach < 2.0 * diam * (1.0 - 1e-12))
    fail(ErrorKind::InvalidGeometry, "enclosing disk clearance is below twice the largest body diameter");

  const MeshControls& mc = u.controls;
  auto mesh = std::make_shared<const Mesh>(build_mesh(cfg.bodies, mc, {Shape{d0}}));
  const Mesh& m = *mesh;
  std::size_t n = m.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
  const auto& gl = GaussLegendre::instance();
  parallel_for(n, mc.threads, [&](std::size_t i) {
    int own = m.panel_of[i];
    for (std::size_t q = 0; q < m.panels.size(); ++q) {
      const Panel& p = m.panels[q];
      std::optional<double> s0;
      if (static_cast<int>(q) == own) s0 = gl.nodes[i - p.first];
      auto wts = detail::log_weights(m, p, m.x[i], mc.near_factor, s0);
      for (std::size_t k = 0; k < kPanelOrder; ++k) a(i, p.first + k) = wts[k] / m.w[p.first + k];
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    a(i, n) = 1.0;
    a(n, i) = 1.0;
  }
  double cond = 0.0;
  auto lu = detail::factorize(a, mc, cond);

  Decomposition out;
  out.C0 = u.constants[1];
  out.C1 = u.constants[0] - out.C0;
  out.C3 = u.constants[2] - out.C0;
  int outer_id = m.body_count;
  std::vector<double> u_outer(n, 0.0);
  parallel_for(n, mc.threads, [&](std::size_t i) {
    if (m.body[i] == outer_id) u_outer[i] = eval_potential(u, m.x[i]) - out.C0;
  });
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, 3);
  for (std::size_t i = 0; i < n; ++i) {
    int b = m.body[i];
    rhs(i, 0) = u_outer[i];
    if (b != outer_id && cfg.conductor_of(b) == 0) rhs(i, 1) = 1.0;
    if (b != outer_id && cfg.conductor_of(b) == 2) rhs(i, 2) = 1.0;
  }
  Eigen::MatrixXd z = lu.solve(rhs);
  auto bodies = std::make_shared<const std::vector<Body>>(cfg.bodies);
  auto field = [&](int col) {
    InteriorField f{mesh, bodies, d0, std::vector<double>(n), z(n, col), mc.near_factor};
    for (std::size_t i = 0; i < n; ++i) f.sigma[i] = z(i, col) / m.w[i];
    return f;
  };
  out.v0 = field(0);
  out.v1 = field(1);
  out.v3 = field(2);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (out.probes.size() < 200) {
    double rad = d0.radius * std::sqrt(unit(rng)) * 0.98, ang = kTwoPi * unit(rng);
    Vec2 x = d0.center + rad * Vec2{std::cos(ang), std::sin(ang)};
    bool ok = true;
    for (const auto& b : cfg.bodies) ok = ok && b.signed_distance(x) > 0.0;
    if (ok) out.probes.push_back(x);
  }
  std::vector<double> err(out.probes.size()), scale(out.probes.size());
  parallel_for(out.probes.size(), mc.threads, [&](std::size_t i) {
    Vec2 x = out.probes[i];
    double uv = eval_potential(u, x);
    double rec = out.C0 + out.v0.value(x) + out.C1 * out.v1.value(x) + out.C3 * out.v3.value(x);
    err[i] = std::abs(uv - rec);
    scale[i] = std::abs(uv - out.C0);
  });
  out.residual = *std::max_element(err.begin(), err.end()) /
                 std::max(*std::max_element(scale.begin(), scale.end()), 1e-300);
  return out;
}

inline Decomposition decompose_u(const ExteriorSolution& u, const Configuration& cfg, std::uint64_t seed = 1) {
  return decompose_u(u, cfg, default_enclosing_disk(cfg), seed);
}

// ---------------------------------------------------------------------------
// CSV dump

inline void write_solution_csv(std::ostream& os, const ExteriorSolution& sol) {
  os << std::setprecision(17);
  os << "# problem=" << to_string(sol.problem) << " nodes=" << sol.mesh->size() << " condition=" << sol.condition << '\n';
  for (std::size_t g = 0; g < sol.constants.size(); ++g) os << "# constant[" << g << "]=" << sol.constants[g] << '\n';
  // nu points into the body; dnu = d(nu) w = -sigma
  os << "node,body,x,y,nu_x,nu_y,weight,sigma,dnu\n";
  const Mesh& m = *sol.mesh;
  for (std::size_t i = 0; i < m.size(); ++i)
    os << i << ',' << m.body[i] << ',' << m.x[i].x << ',' << m.x[i].y << ',' << -m.normal[i].x << ','
       << -m.normal[i].y << ',' << m.w[i] << ',' << sol.sigma[i] << ',' << -sol.sigma[i] << '\n';
}

}  // namespace gapfield
