#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gapfield/asymptotics.hpp"

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

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// the standard scenes take most of the runtime; share them across tests
const LemmaReport& case_a_report() {
  static const LemmaReport rep = lemma_suite(build_case_a(1, 0.05, 1, 0.05, 1e-3));
  return rep;
}
const LemmaReport& case_b_report() {
  static const LemmaReport rep = lemma_suite(build_case_b(1, 0.05, 1, 1e-3, 1e-3));
  return rep;
}

}  // namespace

TEST(Predictions, CaseAFormulaArithmetic) {
  auto p = bound_case_a(1, 0.05, 1, 1e-4);
  double ref = 0.5 / std::sqrt(0.05) * std::sqrt(1e-4);
  EXPECT_NEAR(ref, 0.02236, 1e-5);
  EXPECT_LE(rel(p.difference, ref), 1e-15);
  EXPECT_LE(rel(p.upper, 0.5 / std::sqrt(0.05) / std::sqrt(1e-4)), 1e-15);
  EXPECT_GT(p.lower, 0.0);
  EXPECT_EQ(p.tag, CaseTag::A);
}

TEST(Predictions, EqualOuterRadiiGiveHalfPrefactor) {
  for (double r : {0.5, 1.0, 3.0}) {
    auto p = bound_case_a(r, 0.04, r, 1e-4);
    EXPECT_LE(rel(p.difference, 0.5 * r / std::sqrt(0.04) * 1e-2), 1e-14);
  }
}

TEST(Predictions, DifferenceDoublesWhenGapQuadruples) {
  auto a = bound_case_a(1, 0.05, 0.7, 1e-4), b = bound_case_a(1, 0.05, 0.7, 4e-4);
  EXPECT_LE(rel(b.difference, 2.0 * a.difference), 1e-15);
  EXPECT_LE(rel(a.upper, 2.0 * b.upper), 1e-15);
}

TEST(Predictions, CaseBPerGap) {
  auto [g1, g2] = bound_case_b(1, 0.05, 1, 1e-4, 1e-4);
  EXPECT_EQ(g1.difference, g2.difference);
  EXPECT_EQ(g1.upper, g2.upper);
  auto [h1, h2] = bound_case_b(1, 0.05, 1, 1e-4, 4e-4);
  EXPECT_LE(rel(h2.difference, 2.0 * h1.difference), 1e-15);
  EXPECT_NEAR(h1.upper, 223.6, 0.05);
  EXPECT_LE(rel(h1.upper, 0.5 / std::sqrt(0.05) / 1e-2), 1e-15);
  EXPECT_EQ(h1.gap, 1);
  EXPECT_EQ(h2.gap, 2);
}

TEST(Predictions, ShapeCases) {
  auto c = bound_case_c(0.05, 1e-4);
  EXPECT_NEAR(c.difference, 0.04472, 1e-5);
  EXPECT_LE(rel(c.difference, std::sqrt(1e-4 / 0.05)), 1e-15);
  auto half = bound_case_c(0.025, 1e-4);
  EXPECT_LE(rel(half.difference, std::sqrt(2.0) * c.difference), 1e-15);
  EXPECT_LE(rel(half.upper, std::sqrt(2.0) * c.upper), 1e-15);
  auto [d1, d2] = bound_case_d(0.05, 1e-3, 1e-3);
  EXPECT_EQ(d1.upper, d2.upper);
  EXPECT_EQ(d1.difference, d2.difference);
}

TEST(Predictions, ThreeComparableConductors) {
  auto [a, b] = bound_three_general(1e-4, 1e-4);
  EXPECT_LE(rel(a.upper, 100.0), 1e-15);
  EXPECT_LE(rel(b.upper, 100.0), 1e-15);
  auto [x1, x2] = bound_three_general(1e-4, 9e-4);
  auto [y1, y2] = bound_three_general(9e-4, 1e-4);
  EXPECT_EQ(x1.upper, y2.upper);
  EXPECT_EQ(x2.upper, y1.upper);
  // with r2 = 1 the small-inclusion formula differs only by the radii prefactor
  auto [b1, b2] = bound_case_b(2, 1, 3, 1e-4, 9e-4);
  double pre = 2.0 * 3.0 / 5.0;
  EXPECT_LE(rel(b1.upper, pre * x1.upper), 1e-14);
  EXPECT_LE(rel(b2.upper, pre * x2.upper), 1e-14);
}

TEST(Predictions, LengthHomogeneity) {
  for (double lambda : {0.1, 2.0, 7.5}) {
    auto p = bound_case_a(1, 0.05, 0.8, 1e-4), q = bound_case_a(lambda, lambda * 0.05, lambda * 0.8, lambda * 1e-4);
    EXPECT_LE(rel(q.difference, lambda * p.difference), 1e-14);
    EXPECT_LE(rel(q.upper, p.upper), 1e-14);
    auto c = bound_case_c(0.05, 1e-4), d = bound_case_c(lambda * 0.05, lambda * 1e-4);
    EXPECT_LE(rel(d.difference, c.difference), 1e-14);
    EXPECT_LE(rel(d.upper, c.upper / lambda), 1e-14);
  }
}

TEST(Predictions, InvalidInputs) {
  EXPECT_EQ(kind_of([] { bound_case_a(1, 0, 1, 1e-4); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { bound_case_c(0.05, -1.0); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { predictions_for(build_two_disks(1, 1, 1e-3)); }), ErrorKind::InvalidUsage);
  auto preds = predictions_for(build_case_b(1, 0.05, 1, 1e-3, 2e-3));
  ASSERT_EQ(preds.size(), 2u);
  EXPECT_EQ(preds[1].difference, bound_case_b(1, 0.05, 1, 1e-3, 2e-3).second.difference);
}

TEST(LemmaSuite, PotentialDifferenceIdentityOnTwoDisks) {
  EXPECT_LE(detail::identity_residual(build_two_disks(1, 0.3, 1e-3), {}), 1e-6);
  auto cfg = build_two_disks(0.6, 1, 1e-4);
  cfg.background = HarmonicBackground{{{0.0, 0.0}, {0.4, -1.0}, {0.0, 0.3}}};
  EXPECT_LE(detail::identity_residual(cfg, {}), 1e-6);
}

TEST(LemmaSuite, MonotonicNestings) {
  LemmaOptions opt;
  auto c = detail::monotonic_nestings(opt);
  EXPECT_EQ(c.verdict, Verdict::Pass);
  EXPECT_EQ(c.min, 0.0);
  EXPECT_LE(c.max, 0.0);
}

TEST(LemmaSuite, CaseAStandardPasses) {
  const auto& rep = case_a_report();
  for (const auto& c : rep.checks) EXPECT_NE(c.verdict, Verdict::Fail) << c.name << ": " << c.note;
  EXPECT_TRUE(rep.passed());
  EXPECT_EQ(rep.tag, CaseTag::A);
}

TEST(LemmaSuite, CaseAComparisonRatioInUnitInterval) {
  const auto& m = case_a_report().find("comparison_ratio_M");
  EXPECT_GT(m.min, 0.0);
  EXPECT_LE(m.max, 1.0);
  const auto& sign = case_a_report().find("comparison_sign");
  EXPECT_LE(sign.max, 1e-8);
}

TEST(LemmaSuite, CaseAHealthAndIdentity) {
  const auto& rep = case_a_report();
  EXPECT_LE(rep.find("potential_difference_identity").max, 1e-6);
  EXPECT_LE(rep.find("flux_residual").max, 1e-8);
  EXPECT_LE(rep.find("boundary_constancy").max, 1e-8);
  for (const char* name : {"big_arc_flux_over_sqrt_eps", "lump_difference_over_eps"}) {
    const auto& c = rep.find(name);
    EXPECT_GT(c.min, 0.0) << name;
    EXPECT_LE(c.max / c.min, 10.0) << name;
  }
}

TEST(LemmaSuite, CaseBStandardPasses) {
  const auto& rep = case_b_report();
  for (const auto& c : rep.checks) EXPECT_NE(c.verdict, Verdict::Fail) << c.name << ": " << c.note;
  EXPECT_TRUE(rep.passed());
  for (const char* name : {"grad_h1_gap1_times_sqrt_eps1", "grad_h2_gap2_times_sqrt_eps2",
                           "h1_difference_over_sqrt_eps1", "weighted_flux_over_sqrt_eps1"}) {
    const auto& c = rep.find(name);
    EXPECT_GT(c.min, 0.0) << name;
    EXPECT_LE(c.max / c.min, 10.0) << name;
  }
  EXPECT_EQ(rep.find("literal_reading_difference").verdict, Verdict::Info);
}

TEST(LemmaSuite, CaseMismatchIsInvalidUsage) {
  EXPECT_EQ(kind_of([] { lemma_suite(build_two_disks(1, 1, 1e-3)); }), ErrorKind::InvalidUsage);
  CaseShapes s{make_ellipse({0, 0}, 0.7, 1), make_ellipse({0, 0}, 0.6, 1), make_ellipse({0, 0}, 0.7, 1), 0.5};
  EXPECT_EQ(kind_of([&] { lemma_suite(build_case_c(s, 0.05, 1e-3)); }), ErrorKind::InvalidUsage);
}

TEST(LemmaSuite, DeterministicVerdicts) {
  LemmaOptions opt;
  opt.eps_grid = {1e-3, 1e-2};
  opt.nestings = 4;
  auto cfg = build_case_a(1, 0.05, 1, 0.05, 1e-3);
  MeshControls mc;
  mc.base_panels = 8;
  auto a = lemma_suite(cfg, mc, opt), b = lemma_suite(cfg, mc, opt);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    EXPECT_EQ(a.checks[i].name, b.checks[i].name);
    EXPECT_EQ(a.checks[i].ratio, b.checks[i].ratio);
    EXPECT_EQ(a.checks[i].verdict, b.checks[i].verdict);
  }
}

TEST(LemmaSuite, CaseDReportsBothLowerBoundReadings) {
  CaseShapes s{make_ellipse({0, 0}, 0.7, 1), make_ellipse({0, 0}, 0.6, 1), make_ellipse({0, 0}, 0.7, 1), 0.5};
  LemmaOptions opt;
  opt.eps_grid = {1e-4, 1e-3};
  auto rep = lemma_suite(build_case_d(s, 0.05, 1e-3, 1e-3), {}, opt);
  EXPECT_EQ(rep.find("d1_weighted_flux_over_sqrt_eps1_r1").verdict, Verdict::Info);
  EXPECT_EQ(rep.find("d1_weighted_flux_over_sqrt_eps1_r2").verdict, Verdict::Info);
  auto r1 = rep.find("d1_weighted_flux_over_sqrt_eps1_r1"), r2 = rep.find("d1_weighted_flux_over_sqrt_eps1_r2");
  EXPECT_GT(r1.ratio, 0.0);
  EXPECT_GT(r2.ratio, 0.0);
}

TEST(LemmaSuite, ReportCsvLayout) {
  LemmaReport rep;
  rep.tag = CaseTag::A;
  rep.sweep = {1e-4, 1e-3};
  LemmaCheck c;
  c.name = "demo_check";
  c.ratio = 0.5;
  c.min = 0.25;
  c.max = 1.0;
  c.verdict = Verdict::Pass;
  c.note = "synthetic";
  rep.checks.push_back(c);
  std::ostringstream os;
  write_report_csv(os, rep);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "check,ratio,min,max,verdict");
  EXPECT_EQ(row, "demo_check,0.5,0.25,1,pass");
  EXPECT_NE(os.str().find("# demo_check: synthetic"), std::string::npos);
}
