#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gapfield/geometry.hpp"

using namespace gapfield;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::InvalidUsage;
}

// polar peanut r(t) = 1 - 0.5 cos 2t, pinched toward +-x
FourierCurve peanut() {
  FourierCurve c;
  c.x_cos = {0.75, 0.0, -0.25};
  c.x_sin = {0.0, 0.0, 0.0};
  c.y_cos = {0.0, 0.0, 0.0};
  c.y_sin = {1.25, 0.0, -0.25};
  return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Geometry, CaseAStandardIsValidWithCornersOnBothCircles) {
  auto cfg = build_case_a(1, 0.05, 1, 0.05, 0.001);
  ASSERT_EQ(cfg.bodies.size(), 2u);
  const Body& lens = cfg.bodies[1];
  ASSERT_TRUE(lens.is_union());
  ASSERT_EQ(lens.corners().size(), 2u);
  const auto& small = std::get<Disk>(lens.parts()[0]);
  const auto& big = std::get<Disk>(lens.parts()[1]);
  EXPECT_DOUBLE_EQ(small.center.x, 0.05 + 0.0005);
  EXPECT_DOUBLE_EQ(big.center.x, 1 + 0.05 + 0.0005);
  for (const auto& c : lens.corners()) {
    EXPECT_NEAR(distance(c.point, small.center), small.radius, 1e-12);
    EXPECT_NEAR(distance(c.point, big.center), big.radius, 1e-12);
  }
  EXPECT_NEAR(lens.corners()[0].point.y, -lens.corners()[1].point.y, 1e-15);
}

TEST(Geometry, CaseAGapMatchesClosedForm) {
  auto cfg = build_case_a(1, 0.05, 1, 0.05, 0.001);
  GapInfo g = gap(cfg, 0, 1);
  EXPECT_NEAR(g.distance, 0.001, 1e-15);
  EXPECT_NEAR(g.point_a.x, -0.0005, 1e-15);
  EXPECT_NEAR(g.point_a.y, 0.0, 1e-15);
  EXPECT_NEAR(g.point_b.x, 0.0005, 1e-15);
  EXPECT_NEAR(g.point_b.y, 0.0, 1e-15);
  EXPECT_NEAR(distance(g.point_a, g.point_b), g.distance, 1e-15);
}

TEST(Geometry, CaseAOverlapOutOfRangeIsInvalidGeometry) {
  EXPECT_EQ(kind_of([] { build_case_a(1, 0.05, 1, 0.12, 0.001); }), ErrorKind::InvalidGeometry);
  EXPECT_EQ(kind_of([] { build_case_a(1, 0.05, 1, 0.10, 0.001); }), ErrorKind::InvalidGeometry);
  EXPECT_EQ(kind_of([] { build_case_a(1, 0.05, 1, 0.0, 0.001); }), ErrorKind::InvalidGeometry);
}

TEST(Geometry, NonpositiveLengthIsInvalidParameter) {
  EXPECT_EQ(kind_of([] { build_case_a(1, -0.05, 1, 0.05, 0.001); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { build_case_a(1, 0.05, 1, 0.05, 0.0); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { build_case_b(1, 0.05, 1, 1e-3, -1e-3); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { build_case_b(0, 0.05, 1, 1e-3, 1e-3); }), ErrorKind::InvalidParameter);
}

TEST(Geometry, CaseBGapsEqualRequestedValues) {
  auto cfg = build_case_b(1, 0.05, 1, 1e-3, 1e-3);
  EXPECT_LE(rel(gap(cfg, 0, 1).distance, 1e-3), 1e-12);
  EXPECT_LE(rel(gap(cfg, 1, 2).distance, 1e-3), 1e-12);
}

TEST(Geometry, CaseBUnequalGapsAndThirdCenter) {
  auto cfg = build_case_b(1, 0.05, 1, 1e-3, 2e-3);
  // D3 starts eps2 beyond D2's right end 2 r2 + eps1 / 2
  const auto& d3 = std::get<Disk>(cfg.bodies[2].parts()[0]);
  EXPECT_NEAR(d3.center.x, 1 + 0.1 + 0.0005 + 0.002, 1e-14);
  EXPECT_EQ(d3.center.y, 0.0);
  EXPECT_LE(rel(gap(cfg, 1, 2).distance, 2e-3), 1e-12);
  EXPECT_LE(rel(gap(cfg, 0, 1).distance, 1e-3), 1e-12);
}

TEST(Geometry, CaseBScaleRegimeWarning) {
  auto cfg = build_case_b(1, 1, 1, 1e-3, 1e-3);
  EXPECT_FALSE(cfg.warnings.empty());
  auto standard = build_case_b(1, 0.05, 1, 1e-3, 1e-3);
  EXPECT_TRUE(standard.warnings.empty());
}

TEST(Geometry, TwoDiskGapClosedForm) {
  auto cfg = build_two_disks(1, 1, 0.01);
  GapInfo g = gap(cfg, 0, 1);
  EXPECT_NEAR(g.distance, 0.01, 1e-15);
  EXPECT_NEAR(g.point_a.x, -0.005, 1e-15);
  EXPECT_NEAR(g.point_b.x, 0.005, 1e-15);
  GapInfo r = gap(cfg, 1, 0);
  EXPECT_NEAR(r.point_a.x, 0.005, 1e-15);
  EXPECT_NEAR(r.point_b.x, -0.005, 1e-15);
}

TEST(Geometry, GapIdenticalIndicesRejected) {
  auto cfg = build_two_disks(1, 1, 0.01);
  EXPECT_EQ(kind_of([&] { gap(cfg, 1, 1); }), ErrorKind::InvalidUsage);
  EXPECT_EQ(kind_of([&] { gap(cfg, 0, 2); }), ErrorKind::InvalidUsage);
}

TEST(Geometry, NewtonPathAgreesWithClosedFormOnRandomDisks) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rad(0.05, 2.0), ang(0.0, kTwoPi), gp(1e-5, 0.5);
  for (int k = 0; k < 50; ++k) {
    Disk a{{rad(rng), rad(rng)}, rad(rng)};
    double th = ang(rng), r = rad(rng), g = gp(rng);
    Vec2 e{std::cos(th), std::sin(th)};
    Disk b{a.center + (a.radius + r + g) * e, r};
    double closed = distance(a.center, b.center) - a.radius - b.radius;
    GapInfo generic = body_gap(Body(a), Body(b), true);
    EXPECT_LE(rel(generic.distance, closed), 1e-12) << "trial " << k;
    EXPECT_NEAR(distance(generic.point_a, a.center), a.radius, 1e-12);
    EXPECT_NEAR(distance(generic.point_b, b.center), b.radius, 1e-12);
  }
}

TEST(Geometry, SmoothCurveGapOnAlignedEllipses) {
  // ellipse tips at x = 2 and x = 2 + eps: distance eps exactly
  Body a(make_ellipse({0, 0}, 2.0, 1.0));
  Body b(make_ellipse({3.5 + 1e-3, 0}, 1.5, 0.7));
  GapInfo g = body_gap(a, b);
  EXPECT_LE(rel(g.distance, 1e-3), 1e-9);
  EXPECT_NEAR(g.point_a.x, 2.0, 1e-9);
  EXPECT_NEAR(g.point_b.x, 2.0 + 1e-3, 1e-9);
  EXPECT_NEAR(distance(g.point_a, g.point_b), g.distance, 1e-15);
}

TEST(Geometry, CaseDEllipsesRespectHalfPlanesAndGaps) {
  CaseShapes s{make_ellipse({0, 0}, 1.0, 0.8), make_ellipse({0, 0}, 1.0, 0.7), make_ellipse({0, 0}, 0.9, 1.0), 0.5};
  auto cfg = build_case_d(s, 0.05, 1e-3, 1e-3);
  ASSERT_EQ(cfg.bodies.size(), 3u);
  EXPECT_LT(extreme_x(cfg.bodies[0].parts()[0], +1), 0.0);
  EXPECT_GT(extreme_x(cfg.bodies[1].parts()[0], -1), 0.0);
  EXPECT_GT(extreme_x(cfg.bodies[2].parts()[0], -1), 0.0);
  EXPECT_LE(rel(gap(cfg, 0, 1).distance, 1e-3), 1e-9);
  EXPECT_LE(rel(gap(cfg, 1, 2).distance, 1e-3), 1e-9);
}

TEST(Geometry, CaseCWithDisksReproducesCaseA) {
  double r2 = 0.05, a = 0.05, eps = 1e-3;
  CaseShapes s{Disk{{0, 0}, 1.0}, Disk{{0, 0}, 1.0}, Disk{{0, 0}, 1.0}, a / (2 * r2)};
  auto c = build_case_c(s, r2, eps);
  auto ref = build_case_a(1, r2, 1, a, eps);
  GapInfo gc = gap(c, 0, 1), ga = gap(ref, 0, 1);
  EXPECT_NEAR(gc.distance, ga.distance, 1e-15);
  EXPECT_NEAR(distance(gc.point_a, ga.point_a), 0.0, 1e-12);
  EXPECT_NEAR(distance(gc.point_b, ga.point_b), 0.0, 1e-12);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t p = 0; p < ref.bodies[b].parts().size(); ++p) {
      const auto& dc = std::get<Disk>(c.bodies[b].parts()[p]);
      const auto& da = std::get<Disk>(ref.bodies[b].parts()[p]);
      EXPECT_NEAR(distance(dc.center, da.center), 0.0, 1e-12);
      EXPECT_NEAR(dc.radius, da.radius, 1e-15);
    }
}

TEST(Geometry, PeanutGapArcIsInvalidGeometry) {
  EXPECT_FALSE(gap_facing_convex(peanut(), {1.0, 0.0}));
  EXPECT_TRUE(gap_facing_convex(peanut(), {0.0, 1.0}));
  CaseShapes s{make_ellipse({0, 0}, 1.0, 0.8), peanut(), make_ellipse({0, 0}, 1.0, 1.0), 0.5};
  EXPECT_EQ(kind_of([&] { build_case_c(s, 0.05, 1e-3); }), ErrorKind::InvalidGeometry);
  EXPECT_EQ(kind_of([&] { build_case_d(s, 0.05, 1e-3, 1e-3); }), ErrorKind::InvalidGeometry);
}

TEST(Geometry, SelfIntersectingCurveRejected) {
  FourierCurve bow;  // figure eight: (sin t, 0.5 sin 2t)
  bow.x_cos = {0.0, 0.0};
  bow.x_sin = {1.0, 0.0};
  bow.y_cos = {0.0, 0.0};
  bow.y_sin = {0.0, 0.5};
  EXPECT_EQ(kind_of([&] { Body b(bow); }), ErrorKind::InvalidGeometry);
}

TEST(Geometry, LensRequiresProperOverlap) {
  EXPECT_EQ(kind_of([] { Body b(Disk{{0, 0}, 1}, Disk{{3, 0}, 1}); }), ErrorKind::InvalidGeometry);
  EXPECT_EQ(kind_of([] { Body b(Disk{{0, 0}, 1}, Disk{{0.2, 0}, 0.3}); }), ErrorKind::InvalidGeometry);
}

TEST(Geometry, LensArcsFormOneClosedCurveThroughCorners) {
  auto cfg = build_case_a(1, 0.05, 1, 0.05, 0.001);
  const Body& lens = cfg.bodies[1];
  auto arcs = lens.arcs();
  ASSERT_EQ(arcs.size(), 2u);
  // each arc ends where the other begins
  Vec2 a_end = curve_point(arcs[0].shape, arcs[0].t_end), b_begin = curve_point(arcs[1].shape, arcs[1].t_begin);
  Vec2 b_end = curve_point(arcs[1].shape, arcs[1].t_end), a_begin = curve_point(arcs[0].shape, arcs[0].t_begin);
  EXPECT_LT(std::min(distance(a_end, b_begin), distance(a_end, b_end)), 1e-12);
  EXPECT_LT(std::min(distance(a_begin, b_begin), distance(a_begin, b_end)), 1e-12);
  // the small-disk arc includes the gap point, the big-disk arc excludes the overlap
  const auto& small = std::get<Disk>(lens.parts()[0]);
  double tgap = kPi;
  double u = arcs[0].t_begin + wrap_angle(tgap - arcs[0].t_begin);
  EXPECT_LE(u, arcs[0].t_end);
  EXPECT_TRUE(lens.contains(small.center + Vec2{small.radius * 0.5, 0.0}));
}

TEST(Geometry, SymmetricCaseBIsMirrorInvariant) {
  auto cfg = build_case_b(1, 0.05, 1, 1e-3, 1e-3);
  auto axis = mirror_axis(cfg);
  ASSERT_TRUE(axis.has_value());
  const auto& d2 = std::get<Disk>(cfg.bodies[1].parts()[0]);
  EXPECT_NEAR(*axis, d2.center.x, 1e-14);
  auto asym = build_case_b(1, 0.05, 1, 1e-3, 2e-3);
  EXPECT_FALSE(mirror_axis(asym).has_value());
  auto unequal = build_case_b(1, 0.05, 1.3, 1e-3, 1e-3);
  EXPECT_FALSE(mirror_axis(unequal).has_value());
}

TEST(Geometry, HarmonicBackgroundIsRealPartOfPolynomial) {
  HarmonicBackground h{{{0.5, 0.0}, {1.0, 0.0}, {0.0, 2.0}}};  // 0.5 + z + 2i z^2
  Vec2 x{0.3, -0.7};
  std::complex<double> z(x.x, x.y);
  std::complex<double> ref = 0.5 + z + std::complex<double>(0, 2) * z * z;
  EXPECT_NEAR(h.value(x), ref.real(), 1e-15);
  // gradient of Re f is (Re f', -Im f')
  std::complex<double> d = 1.0 + std::complex<double>(0, 4) * z;
  EXPECT_NEAR(h.gradient(x).x, d.real(), 1e-15);
  EXPECT_NEAR(h.gradient(x).y, -d.imag(), 1e-15);
  // five-point Laplacian vanishes up to rounding
  double s = 1e-3;
  double lap = h.value(x + Vec2{s, 0}) + h.value(x - Vec2{s, 0}) + h.value(x + Vec2{0, s}) + h.value(x - Vec2{0, s}) -
               4 * h.value(x);
  EXPECT_NEAR(lap / (s * s), 0.0, 1e-7);
  EXPECT_DOUBLE_EQ(HarmonicBackground::linear_x().value({2.5, 9.0}), 2.5);
}

TEST(Geometry, ConductorPartitionValidated) {
  Configuration cfg;
  cfg.bodies.emplace_back(Disk{{-2, 0}, 1});
  cfg.bodies.emplace_back(Disk{{2, 0}, 1});
  cfg.conductors = {{0}};
  EXPECT_EQ(kind_of([&] { validate(cfg); }), ErrorKind::InvalidGeometry);
  cfg.conductors = {{0, 1}, {1}};
  EXPECT_EQ(kind_of([&] { validate(cfg); }), ErrorKind::InvalidGeometry);
  cfg.conductors = {{0}, {1}};
  EXPECT_NO_THROW(validate(cfg));
  cfg.bodies[1] = Body(Disk{{-0.5, 0}, 1});
  EXPECT_EQ(kind_of([&] { validate(cfg); }), ErrorKind::InvalidGeometry);
}
