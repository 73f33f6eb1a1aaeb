#pragma once

// Panel meshes of body boundaries: 16-point Gauss-Legendre panels, dyadically
// refined toward gap closest points and geometrically graded toward lens corners.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "gapfield/geometry.hpp"
#include "gapfield/quadrature.hpp"

namespace gapfield {

struct MeshControls {
  int base_panels = 16;          ///< panels on a full closed curve before refinement
  double gap_factor = 0.25;      ///< panel length <= gap_factor * gap at the closest points
  int corner_levels = 20;        ///< halvings toward each lens corner
  double corner_floor = 1e-3;    ///< corner grading stops below this fraction of the initial panel
  double proximity = 0.0;        ///< panel length <= proximity * distance to other bodies (0 disables)
  std::size_t max_nodes = 1u << 16;
  double min_panel_length = 1e-12;
  double near_factor = 5.0;      ///< near-singular quadrature within near_factor * panel length
  double condition_limit = 1e13;
  unsigned threads = 0;          ///< 0 selects the hardware concurrency

  friend bool operator==(const MeshControls&, const MeshControls&) = default;
};

struct Panel {
  int arc = 0;
  int body = 0;
  double t0 = 0.0, t1 = 0.0;  ///< curve parameter range
  double length = 0.0;
  Vec2 center;
  double radius = 0.0;        ///< max distance from center to the panel's nodes and ends
  std::size_t first = 0;      ///< index of the first node
};

struct GapTarget {
  int body = 0;
  int arc = -1;
  double t = 0.0;
  Vec2 point;
  double gap = 0.0;
};

/// Discretized boundary of a list of bodies (plus optional extra closed curves).
struct Mesh {
  std::vector<Arc> arcs;
  std::vector<int> arc_body;
  std::vector<Panel> panels;
  std::vector<GapTarget> targets;
  int body_count = 0;

  // per node
  std::vector<Vec2> x;
  std::vector<Vec2> normal;   ///< unit normal pointing out of the body, into the exterior domain
  std::vector<double> w;      ///< arclength quadrature weights
  std::vector<int> body;
  std::vector<int> panel_of;

  std::size_t size() const { return x.size(); }

  double min_panel_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : panels) m = std::min(m, p.length);
    return m;
  }
  double max_panel_length() const {
    double m = 0.0;
    for (const auto& p : panels) m = std::max(m, p.length);
    return m;
  }
  /// Index of the panel containing the boundary point (arc, curve parameter t).
  int find_panel(int arc, double t) const {
    const Arc& a = arcs[arc];
    double tt = t;
    if (a.closed) tt = a.t_begin + wrap_angle(t - a.t_begin);
    else {
      while (tt < a.t_begin - 1e-12) tt += kTwoPi;
      while (tt > a.t_end + 1e-12) tt -= kTwoPi;
    }
    int best = -1;
    double best_miss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < panels.size(); ++i) {
      const Panel& p = panels[i];
      if (p.arc != arc) continue;
      double miss = std::max(p.t0 - tt, tt - p.t1);
      if (miss < best_miss) { best_miss = miss; best = static_cast<int>(i); }
    }
    return best;
  }
  /// Reference coordinate in [-1, 1] of curve parameter t on a panel.
  double reference(const Panel& p, double t) const {
    const Arc& a = arcs[p.arc];
    double tt = a.closed ? a.t_begin + wrap_angle(t - a.t_begin) : t;
    if (!a.closed) {
      while (tt < p.t0 - kPi) tt += kTwoPi;
      while (tt > p.t1 + kPi) tt -= kTwoPi;
    }
    return std::clamp(2.0 * (tt - p.t0) / (p.t1 - p.t0) - 1.0, -1.0, 1.0);
  }
};

/// Body whose every part is grown by delta along its outward normal.
inline Body grown_body(const Body& b, double delta) {
  if (!b.is_union()) return Body(grown(b.parts()[0], delta));
  return Body(grown(b.parts()[0], delta), grown(b.parts()[1], delta));
}

namespace detail {

struct Interval {
  int arc;
  double t0, t1;
  bool settled = false;
};

inline double interval_length(const Shape& s, double t0, double t1) {
  const auto& gl = GaussLegendre::instance();
  double h = 0.5 * (t1 - t0), m = 0.5 * (t1 + t0), len = 0.0;
  for (std::size_t k = 0; k < kPanelOrder; ++k) len += gl.weights[k] * curve_speed(s, m + h * gl.nodes[k]);
  return len * h;
}

}  // namespace detail

/// Builds the boundary mesh. Bodies receive indices 0..n-1; extra closed shapes follow.
inline Mesh build_mesh(const std::vector<Body>& bodies, const MeshControls& mc,
                       const std::vector<Shape>& extra = {}) {
  if (mc.base_panels < 1) fail(ErrorKind::InvalidParameter, "mesh base panel count must be positive");
  Mesh mesh;
  mesh.body_count = static_cast<int>(bodies.size());
  for (std::size_t b = 0; b < bodies.size(); ++b)
    for (auto arc : bodies[b].arcs()) {
      // closed curves run over [-pi, pi): parameters near t = 0 keep full absolute precision
      if (arc.closed) { arc.t_begin = -kPi; arc.t_end = kPi; }
      mesh.arcs.push_back(arc);
      mesh.arc_body.push_back(static_cast<int>(b));
    }
  for (std::size_t e = 0; e < extra.size(); ++e) {
    mesh.arcs.push_back(Arc{extra[e], 0, -kPi, kPi, true});
    mesh.arc_body.push_back(static_cast<int>(bodies.size() + e));
  }

  // gap targets on both sides of every body pair
  for (std::size_t i = 0; i < bodies.size(); ++i)
    for (std::size_t j = i + 1; j < bodies.size(); ++j) {
      GapInfo g = body_gap(bodies[i], bodies[j]);
      if (!(g.distance > 0.0)) fail(ErrorKind::InvalidGeometry, "bodies touch or overlap");
      if (mc.gap_factor * g.distance < mc.min_panel_length)
        fail(ErrorKind::RefinementFailure, "gap below the mesh floor length");
      auto locate = [&](int b, int part, double t, Vec2 p) {
        GapTarget tg{b, -1, t, p, g.distance};
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < mesh.arcs.size(); ++a) {
          if (mesh.arc_body[a] != b || mesh.arcs[a].part != part) continue;
          double tt = mesh.arcs[a].t_begin + wrap_angle(t - mesh.arcs[a].t_begin);
          double miss = std::max(0.0, tt - mesh.arcs[a].t_end);
          if (miss < best) { best = miss; tg.arc = static_cast<int>(a); tg.t = tt; }
        }
        mesh.targets.push_back(tg);
      };
      locate(static_cast<int>(i), g.part_a, g.t_a, g.point_a);
      locate(static_cast<int>(j), g.part_b, g.t_b, g.point_b);
    }

  std::vector<detail::Interval> work;
  for (std::size_t a = 0; a < mesh.arcs.size(); ++a) {
    const Arc& arc = mesh.arcs[a];
    double span = arc.t_end - arc.t_begin;
    int n = arc.closed ? mc.base_panels
                       : std::max(2, static_cast<int>(std::ceil(mc.base_panels * span / kTwoPi)));
    std::vector<double> breaks;
    for (int k = 0; k <= n; ++k) breaks.push_back(arc.t_begin + span * k / n);
    if (!arc.closed) {
      double floor = mc.corner_floor * (breaks[1] - breaks[0]);
      for (int lvl = 0; lvl < mc.corner_levels && 0.5 * (breaks[1] - breaks[0]) >= floor; ++lvl) {
        breaks.insert(breaks.begin() + 1, 0.5 * (breaks[0] + breaks[1]));
        std::size_t m = breaks.size();
        breaks.insert(breaks.end() - 1, 0.5 * (breaks[m - 2] + breaks[m - 1]));
      }
    }
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k)
      work.push_back({static_cast<int>(a), breaks[k], breaks[k + 1]});
  }

  auto other_body_distance = [&](int b, const Shape& s, double t0, double t1) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < bodies.size(); ++o) {
      if (static_cast<int>(o) == b) continue;
      for (double f : {0.0, 0.25, 0.5, 0.75, 1.0})
        d = std::min(d, bodies[o].signed_distance(curve_point(s, t0 + f * (t1 - t0))));
    }
    return d;
  };

  for (int pass = 0;; ++pass) {
    bool changed = false;
    std::vector<detail::Interval> next;
    next.reserve(work.size() * 2);
    for (const auto& iv : work) {
      if (iv.settled) { next.push_back(iv); continue; }
      const Arc& arc = mesh.arcs[iv.arc];
      int b = mesh.arc_body[iv.arc];
      double len = detail::interval_length(arc.shape, iv.t0, iv.t1);
      bool split = false;
      for (const auto& tg : mesh.targets) {
        if (tg.body != b) continue;
        double d;
        if (tg.arc == iv.arc && tg.t >= iv.t0 && tg.t <= iv.t1) d = 0.0;
        else d = std::min(distance(curve_point(arc.shape, iv.t0), tg.point),
                          distance(curve_point(arc.shape, iv.t1), tg.point));
        if (len > std::max(mc.gap_factor * tg.gap, d)) split = true;
      }
      if (!split && mc.proximity > 0.0 && b < mesh.body_count &&
          len > mc.proximity * other_body_distance(b, arc.shape, iv.t0, iv.t1))
        split = true;
      if (split) {
        if (len < 2.0 * mc.min_panel_length)
          fail(ErrorKind::RefinementFailure, "panel length reached the mesh floor");
        double mid = 0.5 * (iv.t0 + iv.t1);
        next.push_back({iv.arc, iv.t0, mid});
        next.push_back({iv.arc, mid, iv.t1});
        changed = true;
      } else {
        next.push_back({iv.arc, iv.t0, iv.t1, true});
      }
    }
    work.swap(next);
    if (work.size() * kPanelOrder > mc.max_nodes)
      fail(ErrorKind::RefinementFailure, "mesh exceeds the node cap of " + std::to_string(mc.max_nodes));
    if (!changed) break;
  }

  const auto& gl = GaussLegendre::instance();
  mesh.x.reserve(work.size() * kPanelOrder);
  for (const auto& iv : work) {
    const Arc& arc = mesh.arcs[iv.arc];
    Panel p;
    p.arc = iv.arc;
    p.body = mesh.arc_body[iv.arc];
    p.t0 = iv.t0;
    p.t1 = iv.t1;
    p.first = mesh.x.size();
    double h = 0.5 * (iv.t1 - iv.t0), m = 0.5 * (iv.t1 + iv.t0);
    for (std::size_t k = 0; k < kPanelOrder; ++k) {
      double t = m + h * gl.nodes[k];
      double sp = curve_speed(arc.shape, t);
      mesh.x.push_back(curve_point(arc.shape, t));
      mesh.normal.push_back(curve_outward_normal(arc.shape, t));
      mesh.w.push_back(gl.weights[k] * h * sp);
      mesh.body.push_back(p.body);
      mesh.panel_of.push_back(static_cast<int>(mesh.panels.size()));
      p.length += gl.weights[k] * h * sp;
    }
    Vec2 a = curve_point(arc.shape, iv.t0), c = curve_point(arc.shape, iv.t1);
    p.center = curve_point(arc.shape, m);
    p.radius = std::max(distance(a, p.center), distance(c, p.center));
    for (std::size_t k = 0; k < kPanelOrder; ++k)
      p.radius = std::max(p.radius, distance(mesh.x[p.first + k], p.center));
    mesh.panels.push_back(p);
  }
  return mesh;
}

}  // namespace gapfield
