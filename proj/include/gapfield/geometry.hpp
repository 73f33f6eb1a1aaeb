#pragma once

// Inclusion shapes, the four canonical scenes (Cases A-D) and gap metrics.
//
// Curves are closed, counterclockwise and parameterized by t in [0, 2*pi).
// "Outward" normals point from the inclusion into the exterior domain; the
// solver's flux convention (normals into the inclusion) is applied in
// field_solver.hpp.

#include <algorithm>
#include <array>
#include <complex>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gapfield/core.hpp"

namespace gapfield {

struct Disk {
  Vec2 center;
  double radius = 1.0;
  friend bool operator==(const Disk&, const Disk&) = default;
};

/// Truncated Fourier curve: x(t) = cx + sum_k (x_cos[k-1] cos kt + x_sin[k-1] sin kt),
/// likewise for y.
struct FourierCurve {
  Vec2 center;
  std::vector<double> x_cos, x_sin, y_cos, y_sin;
  friend bool operator==(const FourierCurve&, const FourierCurve&) = default;
};

/// Curve at constant normal distance `offset` outside a Fourier curve.
struct ParallelCurve {
  FourierCurve base;
  double offset = 0.0;
  friend bool operator==(const ParallelCurve&, const ParallelCurve&) = default;
};

using Shape = std::variant<Disk, FourierCurve, ParallelCurve>;

inline FourierCurve make_ellipse(Vec2 center, double semi_x, double semi_y) {
  return FourierCurve{center, {semi_x}, {0.0}, {0.0}, {semi_y}};
}

// ---------------------------------------------------------------------------
// Curve evaluation

namespace detail {

// order-th derivative of the Fourier sums at t
inline Vec2 fourier_eval(const FourierCurve& c, double t, int order) {
  Vec2 p = order == 0 ? c.center : Vec2{};
  auto series = [&](const std::vector<double>& ca, const std::vector<double>& sa) {
    double acc = 0.0;
    std::size_t n = std::max(ca.size(), sa.size());
    for (std::size_t i = 0; i < n; ++i) {
      double k = static_cast<double>(i + 1);
      double a = i < ca.size() ? ca[i] : 0.0;
      double b = i < sa.size() ? sa[i] : 0.0;
      double ck = std::cos(k * t), sk = std::sin(k * t);
      double kp = std::pow(k, order);
      switch (order % 4) {
        case 0: acc += kp * (a * ck + b * sk); break;
        case 1: acc += kp * (-a * sk + b * ck); break;
        case 2: acc += kp * (-a * ck - b * sk); break;
        case 3: acc += kp * (a * sk - b * ck); break;
      }
    }
    return acc;
  };
  p.x += series(c.x_cos, c.x_sin);
  p.y += series(c.y_cos, c.y_sin);
  return p;
}

}  // namespace detail

inline Vec2 curve_point(const Shape& s, double t);
inline Vec2 curve_d1(const Shape& s, double t);
inline Vec2 curve_d2(const Shape& s, double t);

inline Vec2 curve_point(const Shape& s, double t) {
  return std::visit(
      [t](const auto& c) -> Vec2 {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return c.center + c.radius * Vec2{std::cos(t), std::sin(t)};
        } else if constexpr (std::is_same_v<T, FourierCurve>) {
          return detail::fourier_eval(c, t, 0);
        } else {
          Vec2 d = detail::fourier_eval(c.base, t, 1);
          return detail::fourier_eval(c.base, t, 0) + c.offset * perp_right(d) / norm(d);
        }
      },
      s);
}

inline Vec2 curve_d1(const Shape& s, double t) {
  return std::visit(
      [t](const auto& c) -> Vec2 {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return c.radius * Vec2{-std::sin(t), std::cos(t)};
        } else if constexpr (std::is_same_v<T, FourierCurve>) {
          return detail::fourier_eval(c, t, 1);
        } else {
          // p' (1 + offset * kappa)
          Vec2 d1 = detail::fourier_eval(c.base, t, 1);
          Vec2 d2 = detail::fourier_eval(c.base, t, 2);
          double sp = norm(d1);
          double kappa = cross(d1, d2) / (sp * sp * sp);
          return (1.0 + c.offset * kappa) * d1;
        }
      },
      s);
}

inline Vec2 curve_d2(const Shape& s, double t) {
  return std::visit(
      [t](const auto& c) -> Vec2 {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Disk>) {
          return -c.radius * Vec2{std::cos(t), std::sin(t)};
        } else if constexpr (std::is_same_v<T, FourierCurve>) {
          return detail::fourier_eval(c, t, 2);
        } else {
          Vec2 d1 = detail::fourier_eval(c.base, t, 1);
          Vec2 d2 = detail::fourier_eval(c.base, t, 2);
          Vec2 d3 = detail::fourier_eval(c.base, t, 3);
          double sp2 = dot(d1, d1);
          double sp = std::sqrt(sp2);
          double kappa = cross(d1, d2) / (sp2 * sp);
          double dkappa = cross(d1, d3) / (sp2 * sp) - 3.0 * cross(d1, d2) * dot(d1, d2) / (sp2 * sp2 * sp);
          return (1.0 + c.offset * kappa) * d2 + c.offset * dkappa * d1;
        }
      },
      s);
}

inline double curve_speed(const Shape& s, double t) { return norm(curve_d1(s, t)); }

/// Outward unit normal (exterior side) of a counterclockwise curve.
inline Vec2 curve_outward_normal(const Shape& s, double t) {
  Vec2 d = curve_d1(s, t);
  return perp_right(d) / norm(d);
}

/// Signed curvature; positive where a counterclockwise curve is locally convex.
inline double curve_curvature(const Shape& s, double t) {
  Vec2 d1 = curve_d1(s, t), d2 = curve_d2(s, t);
  double sp = norm(d1);
  return cross(d1, d2) / (sp * sp * sp);
}

inline Shape translated(const Shape& s, Vec2 v) {
  return std::visit(
      [v](auto c) -> Shape {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ParallelCurve>) c.base.center += v;
        else c.center += v;
        return c;
      },
      s);
}

/// Scales about the curve's own center point.
inline Shape scaled(const Shape& s, double f) {
  auto scale_fc = [f](FourierCurve c) {
    for (auto* v : {&c.x_cos, &c.x_sin, &c.y_cos, &c.y_sin})
      for (double& a : *v) a *= f;
    return c;
  };
  return std::visit(
      [&](const auto& c) -> Shape {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Disk>) return Disk{c.center, c.radius * f};
        else if constexpr (std::is_same_v<T, FourierCurve>) return scale_fc(c);
        else return ParallelCurve{scale_fc(c.base), c.offset * f};
      },
      s);
}

/// Shape grown by `delta` along the outward normal.
inline Shape grown(const Shape& s, double delta) {
  return std::visit(
      [delta](const auto& c) -> Shape {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Disk>) return Disk{c.center, c.radius + delta};
        else if constexpr (std::is_same_v<T, FourierCurve>) return ParallelCurve{c, delta};
        else return ParallelCurve{c.base, c.offset + delta};
      },
      s);
}

/// Mirror image through the vertical line x = axis, reparameterized to stay counterclockwise.
inline Shape mirrored(const Shape& s, double axis) {
  auto mirror_fc = [axis](const FourierCurve& c) {
    FourierCurve m;
    m.center = {2.0 * axis - c.center.x, c.center.y};
    // x~(t) = 2 axis - x(pi - t), y~(t) = y(pi - t)
    auto flip = [](const std::vector<double>& v, double even_sign) {
      std::vector<double> out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        double k = static_cast<double>(i + 1);
        double parity = std::fmod(k, 2.0) == 0.0 ? 1.0 : -1.0;
        out[i] = even_sign * parity * v[i];
      }
      return out;
    };
    m.x_cos = flip(c.x_cos, -1.0);
    m.x_sin = flip(c.x_sin, 1.0);
    m.y_cos = flip(c.y_cos, 1.0);
    m.y_sin = flip(c.y_sin, -1.0);
    return m;
  };
  return std::visit(
      [&](const auto& c) -> Shape {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Disk>) return Disk{{2.0 * axis - c.center.x, c.center.y}, c.radius};
        else if constexpr (std::is_same_v<T, FourierCurve>) return mirror_fc(c);
        else return ParallelCurve{mirror_fc(c.base), c.offset};
      },
      s);
}

/// Rough size of a shape, used to scale tolerances.
inline double shape_scale(const Shape& s) {
  if (const auto* d = std::get_if<Disk>(&s)) return d->radius;
  double m = 0.0;
  Vec2 c = curve_point(s, 0.0);
  for (int i = 0; i < 64; ++i) m = std::max(m, distance(curve_point(s, kTwoPi * i / 64.0), c));
  return 0.5 * m;
}

inline double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

// ---------------------------------------------------------------------------
// Projection and inside tests

struct Projection {
  double t = 0.0;
  Vec2 point;
  double signed_distance = 0.0;  ///< positive outside the shape
};

inline Projection project(const Shape& s, Vec2 x) {
  if (const auto* d = std::get_if<Disk>(&s)) {
    Vec2 r = x - d->center;
    double len = norm(r);
    double t = len > 0.0 ? wrap_angle(std::atan2(r.y, r.x)) : 0.0;
    return {t, curve_point(s, t), len - d->radius};
  }
  constexpr int kSamples = 128;
  std::array<std::pair<double, double>, kSamples> samples;
  for (int i = 0; i < kSamples; ++i) {
    double t = kTwoPi * i / kSamples;
    samples[i] = {distance(curve_point(s, t), x), t};
  }
  std::partial_sort(samples.begin(), samples.begin() + 3, samples.end());
  double best_t = samples[0].second;
  double best_d = samples[0].first;
  for (int k = 0; k < 3; ++k) {
    double t = samples[k].second;
    for (int it = 0; it < 60; ++it) {
      Vec2 p = curve_point(s, t), d1 = curve_d1(s, t), d2 = curve_d2(s, t);
      Vec2 r = p - x;
      double g = dot(d1, r);
      double h = dot(d2, r) + dot(d1, d1);
      double step = h > 0.0 ? -g / h : -g / dot(d1, d1);
      double lim = kTwoPi / kSamples;
      step = std::clamp(step, -lim, lim);
      t = wrap_angle(t + step);
      if (std::abs(step) < 1e-15) break;
    }
    double dd = distance(curve_point(s, t), x);
    if (dd < best_d) { best_d = dd; best_t = t; }
  }
  Vec2 p = curve_point(s, best_t);
  double side = dot(x - p, curve_outward_normal(s, best_t));
  return {best_t, p, side >= 0.0 ? best_d : -best_d};
}

// ---------------------------------------------------------------------------
// Curve validation

namespace detail {

inline bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace detail

/// Validates a Fourier curve (simple, regular) and normalizes it to counterclockwise orientation.
inline FourierCurve validated_curve(FourierCurve c) {
  constexpr int n = 512;
  double area = 0.0;
  std::vector<Vec2> pts(n);
  double max_speed = 0.0, min_speed = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double t = kTwoPi * i / n;
    pts[i] = detail::fourier_eval(c, t, 0);
    double sp = norm(detail::fourier_eval(c, t, 1));
    max_speed = std::max(max_speed, sp);
    min_speed = std::min(min_speed, sp);
  }
  if (!(max_speed > 0.0) || min_speed < 1e-6 * max_speed)
    fail(ErrorKind::InvalidGeometry, "Fourier curve has a vanishing tangent");
  for (int i = 0; i < n; ++i) area += 0.5 * cross(pts[i], pts[(i + 1) % n]);
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (detail::segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
        fail(ErrorKind::InvalidGeometry, "Fourier curve self-intersects");
    }
  if (area < 0.0) {
    for (double& b : c.x_sin) b = -b;
    for (double& b : c.y_sin) b = -b;
  }
  return c;
}

/// Strict convexity on the part of the curve whose outward normal faces `direction`
/// (cosine at least 0.5).
inline bool gap_facing_convex(const Shape& s, Vec2 direction) {
  if (std::holds_alternative<Disk>(s)) return true;
  Vec2 dir = direction / norm(direction);
  double scale = shape_scale(s);
  for (int i = 0; i < 1440; ++i) {
    double t = kTwoPi * i / 1440.0;
    if (dot(curve_outward_normal(s, t), dir) >= 0.5 && curve_curvature(s, t) <= 1e-9 / scale) return false;
  }
  return true;
}

/// Parameter where the curve's x coordinate is extremal (sign = +1 rightmost, -1 leftmost).
inline double extreme_x_param(const Shape& s, int sign) {
  if (std::holds_alternative<Disk>(s)) return sign > 0 ? 0.0 : kPi;
  constexpr int n = 720;
  double best_t = 0.0, best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double t = kTwoPi * i / n;
    double v = sign * curve_point(s, t).x;
    if (v > best) { best = v; best_t = t; }
  }
  for (int it = 0; it < 50; ++it) {
    double g = sign * curve_d1(s, best_t).x;
    double h = sign * curve_d2(s, best_t).x;
    if (h >= 0.0) break;
    double step = std::clamp(-g / h, -kTwoPi / n, kTwoPi / n);
    best_t = wrap_angle(best_t + step);
    if (std::abs(step) < 1e-15) break;
  }
  return best_t;
}

inline double extreme_x(const Shape& s, int sign) { return curve_point(s, extreme_x_param(s, sign)).x; }

// ---------------------------------------------------------------------------
// Closest points between two curves

struct CurvePair {
  double s = 0.0;  ///< parameter on the first curve
  double t = 0.0;  ///< parameter on the second curve
  double distance = 0.0;
};

/// Closest points by damped Newton on the squared distance with 8 starts per curve,
/// backed by a coarse sampling pass.
inline CurvePair closest_points_generic(const Shape& a, const Shape& b) {
  auto F = [&](double s, double t) {
    Vec2 d = curve_point(a, s) - curve_point(b, t);
    return 0.5 * dot(d, d);
  };
  auto newton = [&](double s, double t) {
    double f = F(s, t);
    for (int it = 0; it < 100; ++it) {
      Vec2 pa = curve_point(a, s), pb = curve_point(b, t);
      Vec2 a1 = curve_d1(a, s), b1 = curve_d1(b, t);
      Vec2 a2 = curve_d2(a, s), b2 = curve_d2(b, t);
      Vec2 D = pa - pb;
      double gs = dot(a1, D), gt = -dot(b1, D);
      double hss = dot(a2, D) + dot(a1, a1);
      double htt = -dot(b2, D) + dot(b1, b1);
      double hst = -dot(a1, b1);
      double det = hss * htt - hst * hst;
      double ds, dt;
      if (hss > 0.0 && det > 0.0) {
        ds = -(htt * gs - hst * gt) / det;
        dt = -(-hst * gs + hss * gt) / det;
      } else {
        ds = -gs / std::max(dot(a1, a1), 1e-300);
        dt = -gt / std::max(dot(b1, b1), 1e-300);
      }
      double lim = 0.5;
      double m = std::max(std::abs(ds), std::abs(dt));
      if (m > lim) { ds *= lim / m; dt *= lim / m; }
      double lambda = 1.0;
      double fn = F(s + ds, t + dt);
      while (fn > f && lambda > 1e-8) {
        lambda *= 0.5;
        fn = F(s + lambda * ds, t + lambda * dt);
      }
      if (fn > f) break;
      s += lambda * ds;
      t += lambda * dt;
      bool small = std::abs(lambda * ds) < 1e-15 && std::abs(lambda * dt) < 1e-15;
      f = fn;
      if (small || f == 0.0) break;
    }
    return CurvePair{wrap_angle(s), wrap_angle(t), std::sqrt(2.0 * f)};
  };
  CurvePair best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      CurvePair c = newton(kTwoPi * i / 8.0, kTwoPi * j / 8.0);
      if (c.distance < best.distance) best = c;
    }
  // fallback: coarse sampling
  constexpr int n = 96;
  std::vector<Vec2> pa(n), pb(n);
  for (int i = 0; i < n; ++i) {
    pa[i] = curve_point(a, kTwoPi * i / n);
    pb[i] = curve_point(b, kTwoPi * i / n);
  }
  double coarse = std::numeric_limits<double>::infinity();
  int bi = 0, bj = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d = distance(pa[i], pb[j]);
      if (d < coarse) { coarse = d; bi = i; bj = j; }
    }
  if (coarse < best.distance) {
    CurvePair c = newton(kTwoPi * bi / n, kTwoPi * bj / n);
    if (c.distance < best.distance) best = c;
    if (coarse < best.distance) fail(ErrorKind::NumericFailure, "closest-point Newton did not converge");
  }
  return best;
}

inline CurvePair closest_points(const Shape& a, const Shape& b) {
  const auto* da = std::get_if<Disk>(&a);
  const auto* db = std::get_if<Disk>(&b);
  if (da && db) {
    Vec2 e = db->center - da->center;
    double len = norm(e);
    e = e / len;
    return {wrap_angle(std::atan2(e.y, e.x)), wrap_angle(std::atan2(-e.y, -e.x)),
            len - da->radius - db->radius};
  }
  return closest_points_generic(a, b);
}

// ---------------------------------------------------------------------------
// Bodies

struct Corner {
  Vec2 point;
  double t_first = 0.0;   ///< parameter on the first part
  double t_second = 0.0;  ///< parameter on the second part
};

/// One boundary arc of a body: the part of `shape` between t_begin and t_end (t_end > t_begin,
/// possibly beyond 2*pi), traversed counterclockwise.
struct Arc {
  Shape shape;
  int part = 0;
  double t_begin = 0.0;
  double t_end = kTwoPi;
  bool closed = true;
};

/// A single inclusion: one closed curve, or the union of two overlapping curves
/// (the lens body when both are disks).
class Body {
 public:
  Body() = default;
  explicit Body(Shape s) : parts_{std::move(s)} {
    if (auto* fc = std::get_if<FourierCurve>(&parts_[0])) *fc = validated_curve(*fc);
    if (auto* d = std::get_if<Disk>(&parts_[0]); d && !(d->radius > 0.0))
      fail(ErrorKind::InvalidParameter, "disk radius must be positive");
  }
  Body(Shape first, Shape second) : parts_{std::move(first), std::move(second)} {
    for (auto& p : parts_) {
      if (auto* fc = std::get_if<FourierCurve>(&p)) *fc = validated_curve(*fc);
      if (auto* d = std::get_if<Disk>(&p); d && !(d->radius > 0.0))
        fail(ErrorKind::InvalidParameter, "disk radius must be positive");
    }
    corners_ = union_corners(parts_[0], parts_[1]);
  }

  bool is_union() const { return parts_.size() == 2; }
  const std::vector<Shape>& parts() const { return parts_; }
  const std::vector<Corner>& corners() const { return corners_; }

  /// Signed distance to the body boundary (negative inside).
  double signed_distance(Vec2 x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : parts_) d = std::min(d, project(p, x).signed_distance);
    return d;
  }
  bool contains(Vec2 x) const { return signed_distance(x) < 0.0; }

  /// Boundary arcs, optionally of the body grown by `offset`.
  std::vector<Arc> arcs(double offset = 0.0) const {
    if (!is_union()) return {Arc{grown(parts_[0], offset), 0, 0.0, kTwoPi, true}};
    Shape a = grown(parts_[0], offset), b = grown(parts_[1], offset);
    auto cs = offset == 0.0 ? corners_ : union_corners(a, b);
    auto arc_outside = [](const Shape& self, const Shape& other, int part, double t0, double t1) {
      // counterclockwise from t0 to t1 if its midpoint is outside `other`, else the complement
      double span = wrap_angle(t1 - t0);
      double mid = t0 + 0.5 * span;
      if (project(other, curve_point(self, mid)).signed_distance > 0.0)
        return Arc{self, part, t0, t0 + span, false};
      return Arc{self, part, t1, t1 + (kTwoPi - span), false};
    };
    return {arc_outside(a, b, 0, cs[0].t_first, cs[1].t_first),
            arc_outside(b, a, 1, cs[0].t_second, cs[1].t_second)};
  }

  Body translated_by(Vec2 v) const {
    if (!is_union()) return Body(translated(parts_[0], v));
    return Body(translated(parts_[0], v), translated(parts_[1], v));
  }
  Body mirrored_at(double axis) const {
    if (!is_union()) return Body(mirrored(parts_[0], axis));
    return Body(mirrored(parts_[0], axis), mirrored(parts_[1], axis));
  }

  friend bool operator==(const Body& a, const Body& b) { return a.parts_ == b.parts_; }

  /// Both intersection points of two overlapping closed curves.
  static std::vector<Corner> union_corners(const Shape& a, const Shape& b) {
    const auto* da = std::get_if<Disk>(&a);
    const auto* db = std::get_if<Disk>(&b);
    if (da && db) {
      Vec2 e = db->center - da->center;
      double d = norm(e);
      if (!(d < da->radius + db->radius))
        fail(ErrorKind::InvalidGeometry, "union parts do not overlap");
      if (d + std::min(da->radius, db->radius) <= std::max(da->radius, db->radius))
        fail(ErrorKind::InvalidGeometry, "one union part contains the other");
      e = e / d;
      double along = (d * d + da->radius * da->radius - db->radius * db->radius) / (2.0 * d);
      double h = std::sqrt(std::max(0.0, da->radius * da->radius - along * along));
      std::vector<Corner> out;
      for (double sgn : {-1.0, 1.0}) {
        Vec2 p = da->center + along * e + sgn * h * Vec2{-e.y, e.x};
        Vec2 ra = p - da->center, rb = p - db->center;
        out.push_back({p, wrap_angle(std::atan2(ra.y, ra.x)), wrap_angle(std::atan2(rb.y, rb.x))});
      }
      return out;
    }
    constexpr int n = 1024;
    std::vector<bool> inside(n);
    for (int i = 0; i < n; ++i) inside[i] = project(b, curve_point(a, kTwoPi * i / n)).signed_distance < 0.0;
    std::vector<Corner> out;
    for (int i = 0; i < n; ++i) {
      if (inside[i] == inside[(i + 1) % n]) continue;
      double s = kTwoPi * (i + 0.5) / n;
      double t = project(b, curve_point(a, s)).t;
      for (int it = 0; it < 60; ++it) {
        Vec2 r = curve_point(a, s) - curve_point(b, t);
        Vec2 ja = curve_d1(a, s), jb = curve_d1(b, t);
        // solve [ja, -jb] [ds, dt]^T = -r
        double det = cross(ja, -jb);
        if (std::abs(det) < 1e-300) break;
        double ds = cross(-r, -jb) / det;
        double dt = cross(ja, -r) / det;
        s += ds;
        t += dt;
        if (std::abs(ds) + std::abs(dt) < 1e-15) break;
      }
      out.push_back({curve_point(a, s), wrap_angle(s), wrap_angle(t)});
    }
    if (out.size() != 2)
      fail(ErrorKind::InvalidGeometry, "union parts must intersect in exactly two points (found " +
                                           std::to_string(out.size()) + ")");
    return out;
  }

 private:
  std::vector<Shape> parts_;
  std::vector<Corner> corners_;
};

// ---------------------------------------------------------------------------
// Harmonic background

/// H(z) = Re sum_k a_k z^k.
struct HarmonicBackground {
  std::vector<std::complex<double>> coeffs;

  static HarmonicBackground linear_x() { return {{0.0, 1.0}}; }
  static HarmonicBackground constant(double c) { return {{c}}; }

  double value(Vec2 x) const {
    std::complex<double> z(x.x, x.y), acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * z + coeffs[k];
    return acc.real();
  }
  Vec2 gradient(Vec2 x) const {
    std::complex<double> z(x.x, x.y), acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 1;) acc = acc * z + static_cast<double>(k) * coeffs[k];
    return {acc.real(), -acc.imag()};
  }
  bool is_constant() const {
    for (std::size_t k = 1; k < coeffs.size(); ++k)
      if (coeffs[k] != 0.0) return false;
    return true;
  }
  friend bool operator==(const HarmonicBackground&, const HarmonicBackground&) = default;
};

// ---------------------------------------------------------------------------
// Gap metrics

struct GapInfo {
  double distance = 0.0;
  Vec2 point_a;  ///< closest point on the first body
  Vec2 point_b;  ///< closest point on the second body
  int body_a = -1, body_b = -1;
  int part_a = 0, part_b = 0;
  double t_a = 0.0, t_b = 0.0;

  Vec2 midpoint() const { return 0.5 * (point_a + point_b); }
};

/// Gap between two bodies; `generic` forces the Newton path even for disk pairs.
inline GapInfo body_gap(const Body& a, const Body& b, bool generic = false) {
  GapInfo best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.parts().size(); ++i)
    for (std::size_t j = 0; j < b.parts().size(); ++j) {
      CurvePair c = generic ? closest_points_generic(a.parts()[i], b.parts()[j])
                            : closest_points(a.parts()[i], b.parts()[j]);
      if (c.distance < best.distance) {
        best.distance = c.distance;
        best.part_a = static_cast<int>(i);
        best.part_b = static_cast<int>(j);
        best.t_a = c.s;
        best.t_b = c.t;
        best.point_a = curve_point(a.parts()[i], c.s);
        best.point_b = curve_point(b.parts()[j], c.t);
      }
    }
  return best;
}

// ---------------------------------------------------------------------------
// Configuration

enum class CaseTag { A, B, C, D, Free };

inline const char* to_string(CaseTag c) {
  switch (c) {
    case CaseTag::A: return "A";
    case CaseTag::B: return "B";
    case CaseTag::C: return "C";
    case CaseTag::D: return "D";
    case CaseTag::Free: return "free";
  }
  return "free";
}

struct Configuration {
  std::vector<Body> bodies;
  std::vector<std::vector<int>> conductors;  ///< body indices per equipotential conductor
  HarmonicBackground background = HarmonicBackground::linear_x();
  CaseTag tag = CaseTag::Free;
  std::map<std::string, double> params;  ///< builder inputs (r1, r2, eps, ...)
  std::vector<std::string> warnings;

  int conductor_of(int body) const {
    for (std::size_t c = 0; c < conductors.size(); ++c)
      for (int b : conductors[c])
        if (b == body) return static_cast<int>(c);
    return -1;
  }
  double param(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) fail(ErrorKind::InvalidUsage, "configuration has no parameter '" + key + "'");
    return it->second;
  }
  /// Radius of a disk centered at the origin that contains every body.
  double extent() const {
    double r = 0.0;
    for (const auto& b : bodies)
      for (const auto& arc : b.arcs())
        for (int i = 0; i <= 64; ++i)
          r = std::max(r, norm(curve_point(arc.shape, arc.t_begin + (arc.t_end - arc.t_begin) * i / 64.0)));
    return r;
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.bodies == b.bodies && a.conductors == b.conductors && a.background == b.background &&
           a.tag == b.tag && a.params == b.params;
  }
};

/// Checks the partition and the pairwise separation of bodies; throws invalid-geometry.
inline void validate(const Configuration& cfg) {
  std::vector<int> seen(cfg.bodies.size(), 0);
  for (const auto& group : cfg.conductors) {
    if (group.empty()) fail(ErrorKind::InvalidGeometry, "empty conductor group");
    for (int b : group) {
      if (b < 0 || b >= static_cast<int>(cfg.bodies.size()))
        fail(ErrorKind::InvalidGeometry, "conductor references unknown body " + std::to_string(b));
      ++seen[b];
    }
  }
  for (std::size_t b = 0; b < seen.size(); ++b)
    if (seen[b] != 1)
      fail(ErrorKind::InvalidGeometry, "body " + std::to_string(b) + " must belong to exactly one conductor");
  for (std::size_t i = 0; i < cfg.bodies.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.bodies.size(); ++j) {
      const Body& a = cfg.bodies[i];
      const Body& b = cfg.bodies[j];
      GapInfo g = body_gap(a, b);
      bool nested = a.contains(curve_point(b.parts()[0], 0.0)) || b.contains(curve_point(a.parts()[0], 0.0));
      if (!(g.distance > 0.0) || nested)
        fail(ErrorKind::InvalidGeometry,
             "bodies " + std::to_string(i) + " and " + std::to_string(j) + " are not separated");
    }
}

/// Gap between conductors i and j (minimum over their bodies).
inline GapInfo gap(const Configuration& cfg, int i, int j) {
  int n = static_cast<int>(cfg.conductors.size());
  if (i == j) fail(ErrorKind::InvalidUsage, "gap needs two distinct conductors");
  if (i < 0 || j < 0 || i >= n || j >= n) fail(ErrorKind::InvalidUsage, "conductor index out of range");
  GapInfo best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int a : cfg.conductors[i])
    for (int b : cfg.conductors[j]) {
      GapInfo g = body_gap(cfg.bodies[a], cfg.bodies[b]);
      if (g.distance < best.distance) {
        best = g;
        best.body_a = a;
        best.body_b = b;
      }
    }
  return best;
}

inline Configuration translated(const Configuration& cfg, Vec2 v) {
  Configuration out = cfg;
  for (auto& b : out.bodies) b = b.translated_by(v);
  return out;
}

/// Axis x = x0 of a mirror symmetry mapping the body list onto itself, if any.
inline std::optional<double> mirror_axis(const Configuration& cfg, double tol = 1e-12) {
  if (cfg.bodies.empty()) return std::nullopt;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& b : cfg.bodies)
    for (const auto& p : b.parts()) {
      lo = std::min(lo, extreme_x(p, -1));
      hi = std::max(hi, extreme_x(p, +1));
    }
  double axis = 0.5 * (lo + hi);
  auto close = [tol](const Shape& s, const Shape& t) {
    for (int i = 0; i < 16; ++i) {
      double u = kTwoPi * i / 16.0;
      if (distance(curve_point(s, u), curve_point(t, u)) > tol * std::max(1.0, shape_scale(s))) return false;
    }
    return true;
  };
  for (const auto& b : cfg.bodies) {
    Body m = b.mirrored_at(axis);
    bool found = false;
    for (const auto& c : cfg.bodies) {
      if (c.parts().size() != m.parts().size()) continue;
      bool all = true;
      for (std::size_t k = 0; k < c.parts().size() && all; ++k) {
        bool any = false;
        for (std::size_t l = 0; l < m.parts().size(); ++l) any = any || close(c.parts()[k], m.parts()[l]);
        all = any;
      }
      if (all) { found = true; break; }
    }
    if (!found) return std::nullopt;
  }
  return axis;
}

// ---------------------------------------------------------------------------
// Canonical scenes

namespace detail {

inline void require_positive(std::initializer_list<std::pair<const char*, double>> values) {
  for (const auto& [name, v] : values)
    if (!(v > 0.0) || !std::isfinite(v))
      fail(ErrorKind::InvalidParameter, std::string(name) + " must be positive");
}

// x << y is taken to mean x <= y / 10
inline void warn_if_not_small(Configuration& cfg, const std::string& what, double x, double y) {
  if (x > 0.1 * y) {
    std::ostringstream os;
    os << "scale regime: expected " << what << " (" << x << " vs " << y << ")";
    cfg.warnings.push_back(os.str());
  }
}

}  // namespace detail

/// Case A: D1 = B_r1(c1), D2 = B_r2(c2) u B_r3(c3) with the small disk protruding toward D1.
inline Configuration build_case_a(double r1, double r2, double r3, double a, double eps) {
  detail::require_positive({{"r1", r1}, {"r2", r2}, {"r3", r3}, {"eps", eps}});
  if (!(a > 0.0 && a < 2.0 * r2)) fail(ErrorKind::InvalidGeometry, "overlap requires 0 < a < 2 r2");
  Configuration cfg;
  cfg.tag = CaseTag::A;
  cfg.params = {{"r1", r1}, {"r2", r2}, {"r3", r3}, {"a", a}, {"eps", eps}};
  cfg.bodies.emplace_back(Disk{{-r1 - 0.5 * eps, 0.0}, r1});
  cfg.bodies.emplace_back(Disk{{r2 + 0.5 * eps, 0.0}, r2}, Disk{{r3 + a + 0.5 * eps, 0.0}, r3});
  cfg.conductors = {{0}, {1}};
  detail::warn_if_not_small(cfg, "eps << r2", eps, r2);
  detail::warn_if_not_small(cfg, "r2 << min(r1, r3)", r2, std::min(r1, r3));
  if (std::max(r1, r3) > 10.0 * std::min(r1, r3)) cfg.warnings.push_back("scale regime: expected r1 ~ r3");
  validate(cfg);
  return cfg;
}

/// Case B: three collinear disks with gaps eps1 (D1-D2) and eps2 (D2-D3).
inline Configuration build_case_b(double r1, double r2, double r3, double eps1, double eps2) {
  detail::require_positive({{"r1", r1}, {"r2", r2}, {"r3", r3}, {"eps1", eps1}, {"eps2", eps2}});
  Configuration cfg;
  cfg.tag = CaseTag::B;
  cfg.params = {{"r1", r1}, {"r2", r2}, {"r3", r3}, {"eps1", eps1}, {"eps2", eps2}};
  cfg.bodies.emplace_back(Disk{{-r1 - 0.5 * eps1, 0.0}, r1});
  cfg.bodies.emplace_back(Disk{{r2 + 0.5 * eps1, 0.0}, r2});
  // D3 sits eps2 to the right of D2's rightmost point 2 r2 + eps1/2
  cfg.bodies.emplace_back(Disk{{r3 + 2.0 * r2 + 0.5 * eps1 + eps2, 0.0}, r3});
  cfg.conductors = {{0}, {1}, {2}};
  detail::warn_if_not_small(cfg, "eps1 << r2", eps1, r2);
  detail::warn_if_not_small(cfg, "eps2 << r2", eps2, r2);
  detail::warn_if_not_small(cfg, "r2 << min(r1, r3)", r2, std::min(r1, r3));
  if (std::max(r1, r3) > 10.0 * std::min(r1, r3)) cfg.warnings.push_back("scale regime: expected r1 ~ r3");
  validate(cfg);
  return cfg;
}

/// Reference shapes for Cases C and D. `overlap` is the protrusion offset a of D_right into
/// r2 D_center, as a fraction of the scaled center width (Case C only).
struct CaseShapes {
  Shape left;
  Shape center;
  Shape right;
  double overlap = 0.5;
};

namespace detail {

inline double body_gap_distance(const std::vector<Body>& a, const std::vector<Body>& b) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& x : a)
    for (const auto& y : b) d = std::min(d, body_gap(x, y).distance);
  return d;
}

// Translation along x of `moving` (direction sign toward `fixed`) giving gap exactly eps.
inline double solve_translation(const Body& moving, const std::vector<Body>& fixed, double start, int sign,
                                double eps) {
  auto f = [&](double tau) {
    return body_gap_distance({moving.translated_by({tau, 0.0})}, fixed) - eps;
  };
  double lo = start, hi = start + sign * eps;
  double f0 = f(lo);
  if (std::abs(f0) <= 1e-9 * eps) return lo;
  if (f0 < 0.0) fail(ErrorKind::InvalidGeometry, "initial placement already violates the gap");
  double step = eps;
  int guard = 0;
  while (f(hi) > 0.0) {
    step *= 2.0;
    hi = start + sign * step;
    if (++guard > 60) fail(ErrorKind::InvalidGeometry, "could not bracket the gap translation");
  }
  for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

inline void check_half_planes(const Configuration& cfg) {
  const auto& left = cfg.bodies.front();
  for (const auto& p : left.parts())
    if (extreme_x(p, +1) >= 0.0) fail(ErrorKind::InvalidGeometry, "D1 must lie in the left half-plane");
  for (std::size_t i = 1; i < cfg.bodies.size(); ++i)
    for (const auto& p : cfg.bodies[i].parts())
      if (extreme_x(p, -1) <= 0.0) fail(ErrorKind::InvalidGeometry, "D2, D3 must lie in the right half-plane");
}

inline Shape recentered(const Shape& s) {
  Vec2 c = curve_point(s, 0.0);
  // move the leftmost point to the origin
  double t = extreme_x_param(s, -1);
  c = curve_point(s, t);
  return translated(s, Vec2{-c.x, 0.0});
}

}  // namespace detail

/// Case C: D1 = D_left and D2 = (r2 D_center) u D_right, positioned so that gap(D1, D2) = eps.
inline Configuration build_case_c(const CaseShapes& shapes, double r2, double eps) {
  detail::require_positive({{"r2", r2}, {"eps", eps}});
  if (!gap_facing_convex(shapes.left, {1.0, 0.0}))
    fail(ErrorKind::InvalidGeometry, "D_left is not strictly convex on its gap-facing arc");
  if (!gap_facing_convex(shapes.center, {-1.0, 0.0}))
    fail(ErrorKind::InvalidGeometry, "D_center is not strictly convex on its gap-facing arc");
  if (!gap_facing_convex(shapes.right, {-1.0, 0.0}))
    fail(ErrorKind::InvalidGeometry, "D_right is not strictly convex on its gap-facing arc");
  Shape center = detail::recentered(scaled(shapes.center, r2));
  double width = extreme_x(center, +1) - extreme_x(center, -1);
  double a = shapes.overlap * width;
  if (!(a > 0.0 && a < width)) fail(ErrorKind::InvalidGeometry, "overlap fraction must lie in (0, 1)");
  center = translated(center, {0.5 * eps, 0.0});
  Shape right = translated(detail::recentered(shapes.right), {0.5 * eps + a, 0.0});
  Body d2(center, right);
  Shape left = detail::recentered(shapes.left);
  left = translated(left, {-0.5 * eps - extreme_x(left, +1), 0.0});
  double tau = detail::solve_translation(Body(left), {d2}, 0.0, +1, eps);
  Configuration cfg;
  cfg.tag = CaseTag::C;
  cfg.params = {{"r2", r2}, {"eps", eps}, {"a", a}};
  cfg.bodies.push_back(Body(translated(left, {tau, 0.0})));
  cfg.bodies.push_back(d2);
  cfg.conductors = {{0}, {1}};
  detail::warn_if_not_small(cfg, "eps << r2", eps, r2);
  detail::check_half_planes(cfg);
  validate(cfg);
  return cfg;
}

/// Case D: D1 = D_left, D2 = r2 D_center, D3 = D_right with gaps eps1 and eps2.
inline Configuration build_case_d(const CaseShapes& shapes, double r2, double eps1, double eps2) {
  detail::require_positive({{"r2", r2}, {"eps1", eps1}, {"eps2", eps2}});
  if (!gap_facing_convex(shapes.left, {1.0, 0.0}))
    fail(ErrorKind::InvalidGeometry, "D_left is not strictly convex on its gap-facing arc");
  if (!gap_facing_convex(shapes.center, {-1.0, 0.0}) || !gap_facing_convex(shapes.center, {1.0, 0.0}))
    fail(ErrorKind::InvalidGeometry, "D_center is not strictly convex on its gap-facing arcs");
  if (!gap_facing_convex(shapes.right, {-1.0, 0.0}))
    fail(ErrorKind::InvalidGeometry, "D_right is not strictly convex on its gap-facing arc");
  Shape center = translated(detail::recentered(scaled(shapes.center, r2)), {0.5 * eps1, 0.0});
  Body d2(center);
  Shape left = detail::recentered(shapes.left);
  left = translated(left, {-0.5 * eps1 - extreme_x(left, +1), 0.0});
  double tau_l = detail::solve_translation(Body(left), {d2}, 0.0, +1, eps1);
  Shape right = translated(detail::recentered(shapes.right), {extreme_x(center, +1) + eps2, 0.0});
  double tau_r = detail::solve_translation(Body(right), {d2}, 0.0, -1, eps2);
  Configuration cfg;
  cfg.tag = CaseTag::D;
  cfg.params = {{"r2", r2}, {"eps1", eps1}, {"eps2", eps2}};
  cfg.bodies.push_back(Body(translated(left, {tau_l, 0.0})));
  cfg.bodies.push_back(d2);
  cfg.bodies.push_back(Body(translated(right, {tau_r, 0.0})));
  cfg.conductors = {{0}, {1}, {2}};
  detail::warn_if_not_small(cfg, "eps1 << r2", eps1, r2);
  detail::warn_if_not_small(cfg, "eps2 << r2", eps2, r2);
  detail::check_half_planes(cfg);
  validate(cfg);
  return cfg;
}

/// Two disks in the normalized position: centers (-r1 - eps/2, 0) and (r2 + eps/2, 0).
inline Configuration build_two_disks(double r1, double r2, double eps) {
  detail::require_positive({{"r1", r1}, {"r2", r2}, {"eps", eps}});
  Configuration cfg;
  cfg.tag = CaseTag::Free;
  cfg.params = {{"r1", r1}, {"r2", r2}, {"eps", eps}};
  cfg.bodies.emplace_back(Disk{{-r1 - 0.5 * eps, 0.0}, r1});
  cfg.bodies.emplace_back(Disk{{r2 + 0.5 * eps, 0.0}, r2});
  cfg.conductors = {{0}, {1}};
  validate(cfg);
  return cfg;
}

}  // namespace gapfield
