#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gapfield/sweeps.hpp"
#include "gapfield/svg_plot.hpp"

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

SweepSpec two_disk_spec(int points) {
  SweepSpec s;
  s.scene.family = Family::TwoDisks;
  s.scene.params = {{"r1", 1.0}, {"r2", 1.0}};
  s.vary = "eps";
  s.min = 1e-5;
  s.max = 1e-2;
  s.points = points;
  s.quantities = {"diff1"};
  return s;
}

std::string csv_body(const SweepTable& t) {
  std::ostringstream os;
  write_sweep_csv(os, t, summarize(t, 5.0), false);
  return os.str();
}

SweepTable synthetic(const std::vector<double>& x, const std::vector<double>& y) {
  SweepTable t;
  t.vary = "x";
  t.columns = {"x", "y"};
  for (std::size_t i = 0; i < x.size(); ++i) t.rows.push_back({{x[i], y[i]}, "ok", "", 0.0});
  return t;
}

}  // namespace

TEST(Sweeps, LogGridEndpointsAndSpacing) {
  auto g = log_grid(1e-5, 1e-2, 8);
  ASSERT_EQ(g.size(), 8u);
  EXPECT_EQ(g.front(), 1e-5);
  EXPECT_EQ(g.back(), 1e-2);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_GT(g[i], g[i - 1]);
    EXPECT_NEAR(std::log(g[i] / g[i - 1]), std::log(1e3) / 7.0, 1e-12);
  }
}

TEST(Sweeps, EmptyOrBadGridIsRejected) {
  EXPECT_EQ(kind_of([] { log_grid(1e-5, 1e-2, 0); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { log_grid(1e-2, 1e-5, 4); }), ErrorKind::InvalidParameter);
  EXPECT_EQ(kind_of([] { log_grid(0.0, 1e-2, 4); }), ErrorKind::InvalidParameter);
  auto s = two_disk_spec(0);
  EXPECT_EQ(kind_of([&] { run_sweep(s); }), ErrorKind::InvalidParameter);
}

TEST(Sweeps, SpecValidation) {
  auto s = two_disk_spec(4);
  s.vary = "r3";
  EXPECT_EQ(kind_of([&] { run_sweep(s); }), ErrorKind::InvalidParameter);
  s = two_disk_spec(4);
  s.quantities = {"c1"};
  EXPECT_EQ(kind_of([&] { run_sweep(s); }), ErrorKind::InvalidParameter);
  s = two_disk_spec(4);
  s.scene.params.erase("r2");
  EXPECT_EQ(kind_of([&] { run_sweep(s); }), ErrorKind::InvalidParameter);
}

TEST(Sweeps, ExactPowerLawFit) {
  std::vector<double> x, y;
  for (double v = 1e-4; v < 2.0; v *= 3.0) {
    x.push_back(v);
    y.push_back(3.0 * std::pow(v, 0.5));
  }
  auto f = fit_power_law(x, y);
  EXPECT_NEAR(f.exponent, 0.5, 1e-13);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
  EXPECT_EQ(f.used, x.size());
}

TEST(Sweeps, ConstantDataFitsZeroExponent) {
  auto f = fit_power_law({1, 2, 4, 8, 16}, {7, 7, 7, 7, 7});
  EXPECT_NEAR(f.exponent, 0.0, 1e-15);
}

TEST(Sweeps, RefitOfPredictedValuesIsStable) {
  std::vector<double> x{1e-5, 3e-5, 1e-4, 4e-4, 1e-3, 2e-3}, y{2.1, 1.3, 0.71, 0.37, 0.22, 0.16};
  auto f = fit_power_law(x, y);
  std::vector<double> pred;
  for (double v : x) pred.push_back(std::exp(f.intercept + f.exponent * std::log(v)));
  auto g = fit_power_law(x, pred);
  EXPECT_NEAR(g.exponent, f.exponent, 1e-12);
  EXPECT_NEAR(g.r_squared, 1.0, 1e-12);
  EXPECT_LT(f.r_squared, 1.0);
}

TEST(Sweeps, FitPreconditions) {
  EXPECT_EQ(kind_of([] { fit_power_law({1, 2, 3}, {1, 2, 3}); }), ErrorKind::InvalidUsage);
  EXPECT_EQ(kind_of([] { fit_power_law({1, 2, 3, 4}, {1, -2, 3, 4}); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([] { fit_power_law({1, 1, 1, 1}, {1, 2, 3, 4}); }), ErrorKind::DomainError);
}

TEST(Sweeps, FitSkipsFailedRows) {
  auto t = synthetic({1, 2, 4, 8, 16, 32}, {1, 4, 16, 64, 256, 1024});
  t.rows[2].status = "numeric-failure";
  t.rows[2].values[1] = std::nan("");
  auto f = fit_rate(t, "x", "y");
  EXPECT_NEAR(f.exponent, 2.0, 1e-13);
  EXPECT_EQ(f.used, 5u);
  EXPECT_EQ(f.excluded, 1u);
  // dropping the largest x of an exact law leaves the exponent unchanged
  EXPECT_NEAR(exponent_stability(t, "x", "y"), 0.0, 1e-13);
}

TEST(Sweeps, SandwichOfIdenticalColumns) {
  auto s = sandwich({1, 2, 3, 5}, {1, 2, 3, 5}, 1.0);
  EXPECT_DOUBLE_EQ(s.spread, 1.0);
  EXPECT_TRUE(s.bounded);
  EXPECT_EQ(kind_of([] { sandwich({1, 2}, {1, 0}, 5.0); }), ErrorKind::DomainError);
  auto u = sandwich({1, 2, 3, 40}, {1, 1, 1, 1}, 5.0);
  EXPECT_DOUBLE_EQ(u.spread, 40.0);
  EXPECT_FALSE(u.bounded);
}

TEST(Sweeps, ClosedFormTwoDiskSandwich) {
  std::vector<double> q, p;
  for (double eps : log_grid(1e-6, 1e-2, 9)) {
    Disk a{{-1 - 0.5 * eps, 0}, 1}, b{{0.2 + 0.5 * eps, 0}, 0.2};
    q.push_back(psi_gap_difference(a, b));
    p.push_back(std::sqrt((1.0 + 0.2) / 0.2) * std::sqrt(eps));
  }
  EXPECT_LE(sandwich(q, p, 3.0).spread, 3.0);
}

TEST(Sweeps, TwoDiskDifferenceSweep) {
  auto t = run_sweep(two_disk_spec(8));
  ASSERT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(t.failed_rows(), 0u);
  auto f = fit_rate(t, "eps", "diff1");
  EXPECT_NEAR(f.exponent, 0.5, 0.03);
  auto s = sandwich_check(t, "diff1", "scale_diff1", 3.0);
  EXPECT_TRUE(s.bounded);
  // the finest row sits on the asymptotic within 3 percent
  EXPECT_NEAR(s.ratios.front(), 1.0, 0.03);
  auto footer = summarize(t, 3.0);
  EXPECT_EQ(footer_value(footer, "diff1.sandwich"), "bounded");
  EXPECT_NEAR(std::stod(footer_value(footer, "diff1.predicted_exponent")), 0.5, 1e-12);
  EXPECT_EQ(footer_value(footer, "rows"), "8");
}

TEST(Sweeps, ColumnOrder) {
  SweepSpec s;
  s.scene.family = Family::B;
  s.scene.params = {{"r1", 1}, {"r2", 0.05}, {"r3", 1}};
  s.vary = "r2";
  s.ties = {{"eps1", 2e-4}, {"eps2", 2e-4}};
  s.quantities = {"grad1", "diff1"};
  auto cols = detail::sweep_columns(s);
  std::vector<std::string> want{"r2", "eps1", "eps2", "diff1", "grad1", "scale_diff1", "scale_grad1",
                                "nodes", "min_panel", "condition"};
  EXPECT_EQ(cols, want);
}

TEST(Sweeps, TiedCaseBSweepRecordsBothGaps) {
  SweepSpec s;
  s.scene.family = Family::B;
  s.scene.params = {{"r1", 1}, {"r3", 1}};
  s.vary = "r2";
  s.min = 0.02;
  s.max = 0.05;
  s.points = 2;
  s.ties = {{"eps1", 2e-4}, {"eps2", 2e-4}};
  s.quantities = {"diff1", "diff2", "grad1", "grad2"};
  s.mesh.base_panels = 8;
  auto t = run_sweep(s);
  EXPECT_EQ(t.failed_rows(), 0u);
  auto e1 = t.column("eps1"), r2 = t.column("r2");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(e1[i], 2e-4 * r2[i]);
    for (const char* q : {"diff1", "diff2", "grad1", "grad2"}) EXPECT_GT(t.column(q)[i], 0.0) << q;
  }
}

TEST(Sweeps, FailedRowsAreRecorded) {
  auto s = two_disk_spec(4);
  s.min = 1e-9;
  s.max = 1e-1;
  s.mesh.max_nodes = 2500;
  auto t = run_sweep(s);
  ASSERT_EQ(t.rows.size(), 4u);
  EXPECT_GE(t.failed_rows(), 1u);
  EXPECT_LT(t.failed_rows(), 4u);
  EXPECT_EQ(t.rows.front().status, "refinement-failure");
  EXPECT_FALSE(t.rows.front().detail.empty());
  EXPECT_TRUE(std::isnan(t.column("diff1").front()));
  EXPECT_EQ(t.rows.back().status, "ok");
  s.max = 1e-8;
  EXPECT_EQ(kind_of([&] { run_sweep(s); }), ErrorKind::SweepFailure);
}

TEST(Sweeps, CsvRoundTrip) {
  auto t = run_sweep(two_disk_spec(4));
  auto footer = summarize(t, 5.0);
  std::ostringstream os;
  write_sweep_csv(os, t, footer);
  std::istringstream is(os.str());
  Footer back;
  auto r = read_sweep_csv(is, &back);
  EXPECT_EQ(r.columns, t.columns);
  EXPECT_EQ(r.vary, "eps");
  ASSERT_EQ(r.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.rows[i].values, t.rows[i].values);
    EXPECT_EQ(r.rows[i].status, "ok");
  }
  EXPECT_EQ(back, footer);
  EXPECT_EQ(csv_body(r), csv_body(t));
}

TEST(Sweeps, CsvParseErrorsNameTheLine) {
  std::istringstream bad("row,eps,status,detail\n0,abc,ok,\n");
  try {
    read_sweep_csv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream empty("");
  EXPECT_EQ(kind_of([&] { read_sweep_csv(empty); }), ErrorKind::ParseError);
}

TEST(Sweeps, WorkersDoNotChangeTheTable) {
  auto one = two_disk_spec(4), two = two_disk_spec(4);
  two.workers = 2;
  EXPECT_EQ(csv_body(run_sweep(one)), csv_body(run_sweep(two)));
}

TEST(Sweeps, PlotCarriesFitAndGuide) {
  std::vector<double> x, y, s;
  for (double v : log_grid(1e-5, 1e-2, 6)) {
    x.push_back(v);
    y.push_back(2.0 * std::sqrt(v));
    s.push_back(std::sqrt(v));
  }
  SweepTable t;
  t.vary = "eps";
  t.columns = {"eps", "diff1", "scale_diff1"};
  for (std::size_t i = 0; i < x.size(); ++i) t.rows.push_back({{x[i], y[i], s[i]}, "ok", "", 0.0});
  auto p = sweep_plot(t, "diff1", 5.0);
  EXPECT_NEAR(p.fit_exponent, 0.5, 1e-12);
  EXPECT_NEAR(p.guide_slope, 0.5, 1e-12);
  std::ostringstream a, b;
  write_svg(a, p);
  write_svg(b, p);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("fit slope 0.5000"), std::string::npos);
  EXPECT_NE(a.str().find("guide slope 0.5000"), std::string::npos);
  EXPECT_NE(a.str().find("bounded"), std::string::npos);
  EXPECT_EQ(a.str().rfind("</svg>\n"), a.str().size() - 7);
}
