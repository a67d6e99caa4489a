#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "bsdej/errors.hpp"
#include "bsdej/serialize.hpp"
#include "bsdej/stochastic_integrals.hpp"

using namespace bsdej;

namespace {

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / (x.size() - 1);
}

/// One path, two steps, jumps with mark 0 then mark 1.
PathBatch two_jump_path(const MarkSpace& marks) {
  const TimeGrid g(1.0, 2);
  std::vector<std::vector<JumpEvent>> jumps{{JumpEvent{0.3, 0, 0}, JumpEvent{0.8, 1, 1}}};
  return PathBatch(g, 0, 1, 0, {}, marks, jumps);
}

}  // namespace

TEST(BrownianIntegral, ZeroIntegrand) {
  const PathBatch b = simulate_brownian(TimeGrid(1.0, 4), 1, 10, 1);
  const std::vector<double> z(10 * 4, 0.0);
  for (double v : brownian_integral(z, b)) EXPECT_EQ(v, 0.0);
}

TEST(BrownianIntegral, UnitIntegrandIsBrownianPath) {
  const TimeGrid g(1.0, 6);
  const PathBatch b = simulate_brownian(g, 1, 20, 2);
  const std::vector<double> z(20 * 6, 1.0);
  const auto m = brownian_integral(z, b);
  for (int p = 0; p < 20; ++p) {
    double w = 0.0;
    for (int j = 0; j < 6; ++j) {
      EXPECT_EQ(m[p * 7 + j], w);
      w += b.increment(p, j)[0];
    }
    EXPECT_EQ(m[p * 7 + 6], w);
  }
}

TEST(BrownianIntegral, MeanWithinCltBand) {
  const TimeGrid g(1.0, 4);
  const int n = 100000;
  const PathBatch b = simulate_brownian(g, 1, n, 3);
  const std::vector<double> z(static_cast<std::size_t>(n) * 4, 1.0);
  const auto m = brownian_integral(z, b);
  double s = 0.0;
  for (int p = 0; p < n; ++p) s += m[p * 5 + 4];
  EXPECT_LT(std::abs(s / n), 4.0 * std::sqrt(1.0 / n));
}

TEST(BrownianIntegral, ShapeMismatch) {
  const PathBatch b = simulate_brownian(TimeGrid(1.0, 4), 2, 10, 1);
  EXPECT_THROW(brownian_integral(std::vector<double>(10 * 4, 0.0), b), InvalidArgument);
}

TEST(PoissonIntegral, ZeroIntegrand) {
  const TimeGrid g(1.0, 5);
  const MarkSpace marks({{1.0}}, {2.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 50, 4);
  const IntegralResult r = poisson_integral_compensated(RandomField::constant(g, marks, 50, 0.0), b);
  for (double v : r.node_values) EXPECT_EQ(v, 0.0);
  for (double v : r.node_qv) EXPECT_EQ(v, 0.0);
}

TEST(PoissonIntegral, UnitIntegrandIsCompensatedCount) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}}, {2.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 200, 5);
  const IntegralResult r = poisson_integral_compensated(RandomField::constant(g, marks, 200, 1.0), b);
  for (int p = 0; p < 200; ++p) {
    EXPECT_NEAR(r.terminal(p), static_cast<double>(b.jumps(p).size()) - 2.0, 1e-12);
    EXPECT_EQ(r.value(p, 0), 0.0);
  }
}

TEST(PoissonIntegral, CompensatedMeanWithinFourSe) {
  const TimeGrid g(1.0, 8);
  const MarkSpace marks({{1.0}}, {2.0});
  const int n = 100000;
  const PathBatch b = simulate_poisson_measure(g, marks, n, 6);
  const IntegralResult r = poisson_integral_compensated(RandomField::constant(g, marks, n, 1.0), b);
  EXPECT_LT(std::abs(mean(r.terminal_values())), 4.0 * std::sqrt(2.0 / n));
}

TEST(PoissonIntegral, IsometryAtPTwo) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}, {-1.0}}, {1.0, 2.0});
  const int n = 100000;
  const PathBatch b = simulate_poisson_measure(g, marks, n, 8);
  const std::vector<double> per{1.5, -0.5};
  const IntegralResult r = poisson_integral_compensated(RandomField::per_mark(g, marks, n, per), b);
  const double expected = 1.5 * 1.5 * 1.0 + 0.5 * 0.5 * 2.0;
  EXPECT_NEAR(variance(r.terminal_values()), expected, 0.05 * expected);
}

TEST(PoissonIntegral, GridMismatch) {
  const MarkSpace marks({{1.0}}, {2.0});
  const PathBatch b = simulate_poisson_measure(TimeGrid(1.0, 4), marks, 10, 1);
  EXPECT_THROW(poisson_integral_compensated(RandomField::constant(TimeGrid(1.0, 5), marks, 10, 1.0), b),
               InvalidArgument);
  const MarkSpace other({{2.0}}, {2.0});
  EXPECT_THROW(poisson_integral_compensated(RandomField::constant(TimeGrid(1.0, 4), other, 10, 1.0), b),
               InvalidArgument);
}

TEST(PoissonIntegral, LinearityIsExact) {
  // Dyadic dt, intensities and integrand values keep every partial sum exact.
  const TimeGrid g(1.0, 8);
  const MarkSpace marks({{1.0}, {0.5}}, {1.0, 2.0});
  const int n = 500;
  const PathBatch b = simulate_poisson_measure(g, marks, n, 9);
  std::vector<double> v(static_cast<std::size_t>(n) * 8 * 2), w(v.size()), c(v.size());
  const double a = 0.5, bb = -2.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>((i * 7) % 13) - 6.0;
    w[i] = static_cast<double>((i * 5) % 11) * 0.25;
    c[i] = a * v[i] + bb * w[i];
  }
  const auto rv = poisson_integral_compensated(RandomField(g, marks, n, v), b);
  const auto rw = poisson_integral_compensated(RandomField(g, marks, n, w), b);
  const auto rc = poisson_integral_compensated(RandomField(g, marks, n, c), b);
  for (std::size_t i = 0; i < rc.node_values.size(); ++i) {
    EXPECT_EQ(rc.node_values[i], a * rv.node_values[i] + bb * rw.node_values[i]);
  }
}

TEST(QuadraticVariation, UnitIntegrandCountsJumps) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}}, {3.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 100, 10);
  const auto qv = quadratic_variation(RandomField::constant(g, marks, 100, 1.0), b);
  for (int p = 0; p < 100; ++p) EXPECT_EQ(qv[p * 5 + 4], static_cast<double>(b.jumps(p).size()));
}

TEST(QuadraticVariation, ScalesWithSquare) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}}, {3.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 100, 10);
  const auto qv = quadratic_variation(RandomField::constant(g, marks, 100, 1.5), b);
  for (int p = 0; p < 100; ++p) EXPECT_EQ(qv[p * 5 + 4], 2.25 * static_cast<double>(b.jumps(p).size()));
}

TEST(QuadraticVariation, TwoMarkedJumps) {
  const MarkSpace marks({{1.0}, {2.0}}, {1.0, 1.0});
  const PathBatch b = two_jump_path(marks);
  const std::vector<double> g{2.0, -3.0};
  const auto v = RandomField::per_mark(b.grid(), marks, 1, g);
  EXPECT_EQ(quadratic_variation(v, b).back(), 13.0);
  EXPECT_EQ(poisson_integral_compensated(v, b).qv(0, 2), 13.0);
}

TEST(QuadraticVariation, NonDecreasingAndMatchesSumOfSquaredJumps) {
  const TimeGrid g(2.0, 10);
  const MarkSpace marks({{1.0}, {-2.0}}, {1.0, 0.5});
  const int n = 300;
  const PathBatch b = simulate_poisson_measure(g, marks, n, 13);
  std::vector<double> vals(static_cast<std::size_t>(n) * 10 * 2);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::sin(0.37 * static_cast<double>(i));
  const RandomField v(g, marks, n, vals);
  const IntegralResult r = poisson_integral_compensated(v, b);
  for (int p = 0; p < n; ++p) {
    double sum = 0.0;
    for (const auto& ev : b.jumps(p)) sum += v(p, ev.step, ev.mark) * v(p, ev.step, ev.mark);
    EXPECT_EQ(r.qv(p, 10), sum);
    for (int k = 1; k <= 10; ++k) EXPECT_LE(r.qv(p, k - 1), r.qv(p, k));
  }
}

TEST(JumpIdentity, UnitIntegrandPasses) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}}, {3.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 200, 14);
  const auto v = RandomField::constant(g, marks, 200, 1.0);
  const auto report = jump_identity_check(v, poisson_integral_compensated(v, b), b);
  EXPECT_TRUE(report.pass);
  EXPECT_EQ(report.failing_paths, 0);
}

TEST(JumpIdentity, TamperedResultFailsWithLocation) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}}, {3.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 200, 14);
  const auto v = RandomField::constant(g, marks, 200, 1.0);
  IntegralResult r = poisson_integral_compensated(v, b);
  int path = 0;
  while (r.jumps[path].empty()) ++path;
  r.jumps[path][0].after += 1e-6;
  const auto report = jump_identity_check(v, r, b);
  EXPECT_FALSE(report.pass);
  ASSERT_TRUE(report.first_violation.has_value());
  EXPECT_EQ(report.first_violation->path, path);
  EXPECT_EQ(report.first_violation->jump, 0);
  EXPECT_EQ(report.failing_paths, 1);
}

TEST(JumpIdentity, MarkNormIntegrandPasses) {
  const TimeGrid g(1.0, 8);
  const MarkSpace marks({{1.0, 2.0}, {-0.5, 0.0}, {3.0, -4.0}}, {1.0, 2.0, 0.5});
  const PathBatch b = simulate_poisson_measure(g, marks, 5000, 7);
  std::vector<double> norms;
  for (int i = 0; i < marks.size(); ++i) norms.push_back(marks.mark_norm(i));
  const auto v = RandomField::per_mark(g, marks, 5000, norms);
  EXPECT_TRUE(jump_identity_check(v, poisson_integral_compensated(v, b), b).pass);
}

TEST(LpFieldNorm, Examples) {
  const MarkSpace one({{1.0}}, {2.0});
  EXPECT_EQ(lp_field_norm(RandomField::constant(TimeGrid(1.0, 4), one, 3, 0.0), 2.0), 0.0);
  EXPECT_NEAR(lp_field_norm(RandomField::constant(TimeGrid(1.0, 4), one, 3, 1.0), 1.0), 2.0, 1e-14);
  const MarkSpace two({{1.0}, {2.0}}, {1.0, 3.0});
  EXPECT_NEAR(lp_field_norm(RandomField::constant(TimeGrid(2.0, 5), two, 3, 1.0), 2.0), std::sqrt(8.0), 1e-14);
  EXPECT_THROW(lp_field_norm(RandomField::constant(TimeGrid(1.0, 4), one, 3, 1.0), 0.5), InvalidArgument);
}

TEST(LpFieldNorm, SectionalNorm) {
  const MarkSpace two({{1.0}, {2.0}}, {1.0, 3.0});
  const std::vector<double> v{2.0, -1.0};
  EXPECT_NEAR(sectional_norm(v, two, 2.0), std::sqrt(4.0 + 3.0), 1e-15);
  EXPECT_NEAR(sectional_norm(v, two, 1.0), 2.0 + 3.0, 1e-15);
}

TEST(IntegralResult, JsonArrays) {
  const TimeGrid g(1.0, 4);
  const MarkSpace marks({{1.0}}, {3.0});
  const PathBatch b = simulate_poisson_measure(g, marks, 7, 1);
  const auto r = poisson_integral_compensated(RandomField::constant(g, marks, 7, 1.0), b);
  const auto j = to_json(r);
  ASSERT_EQ(j.at("terminal_values").size(), 7u);
  EXPECT_EQ(j.at("terminal_qv")[3].get<double>(), r.qv(3, 4));
}
