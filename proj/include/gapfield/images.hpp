#pragma once

// Two-disk closed forms: circle inversion, the common inverse points of two disjoint
// circles and the potential Psi = (log|x - p1| - log|x - p2|) / (2 pi).

#include <cmath>

#include "gapfield/geometry.hpp"

namespace gapfield {

/// Inversion in the circle of d: r^2 (x - c) / |x - c|^2 + c.
inline Vec2 reflect(const Disk& d, Vec2 x) {
  Vec2 r = x - d.center;
  double q = dot(r, r);
  if (q == 0.0) fail(ErrorKind::SingularInput, "cannot reflect the disk center");
  return d.center + (d.radius * d.radius / q) * r;
}

struct FixedPointPair {
  Vec2 p1;  ///< inside the first disk
  Vec2 p2;  ///< inside the second disk
};

namespace detail {

/// Center-line frame of two disjoint disks: unit axis e, the radical point M, the half
/// distance t between the limiting points and alpha = |M - c1| - r1.
struct TwoDiskFrame {
  Vec2 e;
  Vec2 mid;
  double gap = 0.0;
  double alpha = 0.0;
  double t = 0.0;
};

inline TwoDiskFrame two_disk_frame(const Disk& d1, const Disk& d2) {
  if (!(d1.radius > 0.0 && d2.radius > 0.0)) fail(ErrorKind::InvalidParameter, "disk radius must be positive");
  Vec2 dc = d2.center - d1.center;
  double d = norm(dc);
  double g = d - d1.radius - d2.radius;
  if (!(g > 0.0)) fail(ErrorKind::InvalidGeometry, "disks intersect or touch");
  if (g < 1e-12 * std::min(d1.radius, d2.radius)) fail(ErrorKind::InvalidGeometry, "disks are nearly tangent");
  TwoDiskFrame f;
  f.e = dc / d;
  f.gap = g;
  f.alpha = g * (g + 2.0 * d2.radius) / (2.0 * d);
  f.t = std::sqrt(f.alpha * (f.alpha + 2.0 * d1.radius));
  f.mid = d1.radius == d2.radius ? 0.5 * (d1.center + d2.center) : d1.center + (d1.radius + f.alpha) * f.e;
  return f;
}

}  // namespace detail

/// Common inverse points: R2(p1) = p2 and R1(p2) = p1.
inline FixedPointPair fixed_points(const Disk& d1, const Disk& d2) {
  auto f = detail::two_disk_frame(d1, d2);
  return {f.mid - f.t * f.e, f.mid + f.t * f.e};
}

/// Psi[D1, D2] with its boundary constants k1 (on D1) and k2 (on D2).
struct TwoDiskField {
  Disk d1, d2;
  FixedPointPair points;
  double k1 = 0.0, k2 = 0.0;

  double value(Vec2 x) const {
    return (std::log(distance(x, points.p1)) - std::log(distance(x, points.p2))) / kTwoPi;
  }
  Vec2 gradient(Vec2 x) const {
    Vec2 a = x - points.p1, b = x - points.p2;
    return (a / dot(a, a) - b / dot(b, b)) / kTwoPi;
  }
};

/// Gap difference Psi|dD2 - Psi|dD1, evaluated at the closest boundary points in the
/// center-line frame (all differences formed without cancellation).
inline double psi_gap_difference(const Disk& d1, const Disk& d2) {
  auto f = detail::two_disk_frame(d1, d2);
  // closest points sit at -alpha (on D1) and gap - alpha (on D2) from M; p1, p2 at -t, +t
  double a = f.alpha, t = f.t, g = f.gap;
  double on1 = std::log1p(2.0 * a / (t - a));             // log(t + a) - log(t - a)
  double on2 = std::log1p(2.0 * (g - a) / (t - (g - a)));  // log(t + g - a) - log(t - g + a)
  return (on1 + on2) / kTwoPi;
}

inline TwoDiskField psi_two_disks(const Disk& d1, const Disk& d2) {
  TwoDiskField f{d1, d2, fixed_points(d1, d2)};
  auto fr = detail::two_disk_frame(d1, d2);
  Vec2 q1 = d1.center + d1.radius * fr.e;
  f.k1 = f.value(q1);
  f.k2 = f.k1 + psi_gap_difference(d1, d2);
  return f;
}

/// H(p2) - H(p1): the potential difference u|dD2 - u|dD1 for two disks in background H.
inline double two_disk_potential_difference(const Disk& d1, const Disk& d2, const HarmonicBackground& h) {
  auto p = fixed_points(d1, d2);
  return h.value(p.p2) - h.value(p.p1);
}

/// The literal printed form H(p2) - H(-p1), kept as a diagnostic.
inline double two_disk_potential_difference_literal(const Disk& d1, const Disk& d2, const HarmonicBackground& h) {
  auto p = fixed_points(d1, d2);
  return h.value(p.p2) - h.value(-p.p1);
}

/// Leading-order small-gap asymptotic 2 sqrt(2) dH/dx1(0) sqrt(r1 r2 / (r1 + r2)) sqrt(eps).
inline double two_disk_difference_asymptotic(double r1, double r2, double eps, const HarmonicBackground& h) {
  return 2.0 * std::sqrt(2.0) * h.gradient({0.0, 0.0}).x * std::sqrt(r1 * r2 / (r1 + r2)) * std::sqrt(eps);
}

}  // namespace gapfield
