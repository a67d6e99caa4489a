#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "bsdej/errors.hpp"
#include "bsdej/estimates.hpp"
#include "problems.hpp"

using namespace bsdej;
using namespace bsdej::testing;

namespace {

SolverContext full_tree(const BSDEProblem& p) {
  TreeOptions opts;
  opts.recombine = false;
  return make_tree_context(p, opts);
}

// E[max_{k<=n} S_k^2] dt for a symmetric walk with steps +-sqrt(dt), by enumeration.
double walk_sup_square(int n) {
  const double dt = 1.0 / n;
  double acc = 0.0;
  for (unsigned bits = 0; bits < (1u << n); ++bits) {
    int s = 0, m = 0;
    for (int k = 0; k < n; ++k) {
      s += (bits >> k) & 1u ? 1 : -1;
      m = std::max(m, std::abs(s));
    }
    acc += static_cast<double>(m) * m;
  }
  return acc * dt / static_cast<double>(1u << n);
}

}  // namespace

TEST(Estimates, ConstantInstance) {
  const auto p = problem(1.0, 4, zero_driver(), constant_terminal(3.0));
  const Solution s = solve(p, full_tree(p));
  const EstimateReport full = verify_full_estimate(s, p, 2.0);
  EXPECT_NEAR(full.lhs, 9.0, 1e-12);
  EXPECT_EQ(full.lhs, full.rhs_core);
  EXPECT_EQ(*full.implied_constant, 1.0);
  EXPECT_TRUE(full.pass);
  const EstimateReport zv = verify_zv_estimate(s, p, 2.0);
  EXPECT_EQ(zv.lhs, 0.0);
  EXPECT_EQ(*zv.implied_constant, 0.0);
  EXPECT_TRUE(zv.pass);
  EXPECT_FALSE(zv.anomalous);
}

TEST(Estimates, BrownianZvAgainstWalkEnumeration) {
  // Y = B, Z = 1, V = 0: lhs = T, rhs = E sup |B|^2 over the grid.
  const auto p = problem(1.0, 8, zero_driver(), brownian_linear());
  const Solution s = solve(p, full_tree(p));
  const EstimateReport zv = verify_zv_estimate(s, p, 2.0);
  EXPECT_EQ(zv.estimator, "tree");
  EXPECT_NEAR(zv.lhs, 1.0, 1e-12);
  const double oracle = walk_sup_square(8);
  EXPECT_NEAR(zv.rhs_core, oracle, 1e-12);
  EXPECT_NEAR(*zv.implied_constant, 1.0 / oracle, 1e-12);
  EXPECT_TRUE(zv.pass);
}

TEST(Estimates, JumpInstanceFinite) {
  const MarkSpace marks = one_mark(2.0);
  const auto p = problem(1.0, 6, affine_generator(0.5, 0.2, 0.1, 0.1, 0.0, marks, 1, 2.0),
                         sin_plus_jumps(marks, 1.0), marks);
  const Solution s = solve(p, full_tree(p));
  for (double q : {1.5, 2.0, 3.0}) {
    const EstimateReport zv = verify_zv_estimate(s, p, q);
    const EstimateReport full = verify_full_estimate(s, p, q);
    ASSERT_TRUE(zv.implied_constant && full.implied_constant);
    EXPECT_TRUE(std::isfinite(*zv.implied_constant));
    EXPECT_TRUE(std::isfinite(*full.implied_constant));
    EXPECT_GT(zv.lhs, 0.0);
    EXPECT_TRUE(zv.pass && full.pass);
  }
}

TEST(Estimates, GronwallTrend) {
  // f = a y, xi = 1: Y_t = e^{a(T-t)}, Z = V = 0, so the constant is e^{apT}.
  double previous = 0.0;
  for (double a : {0.1, 0.3, 0.5}) {
    const auto p = problem(1.0, 100, linear_y(a), constant_terminal(1.0));
    TreeOptions opts;
    opts.recombine = true;
    const Solution s = solve(p, make_tree_context(p, opts));
    const double c = *verify_full_estimate(s, p, 2.0).implied_constant;
    EXPECT_NEAR(c, std::exp(2.0 * a), 0.03 * std::exp(2.0 * a)) << "a=" << a;
    EXPECT_GT(c, previous);
    previous = c;
  }
}

TEST(Estimates, ScaleCovarianceBitExact) {
  const MarkSpace marks = one_mark(1.5);
  const auto f = affine_generator(0.4, 0.3, 0.2, 0.0, 0.0, marks, 1, 2.0);
  const auto xi = sin_plus_jumps(marks, 1.0);
  TerminalSpec twice;
  twice.xi = [xi](const StateView& s) { return 2.0 * xi(s); };
  twice.description = "2*" + xi.description;
  const auto p1 = problem(1.0, 4, f, xi, marks), p2 = problem(1.0, 4, f, twice, marks);
  const Solution a = solve(p1, full_tree(p1)), b = solve(p2, full_tree(p2));
  for (auto fn : {&verify_zv_estimate, &verify_full_estimate}) {
    const EstimateReport ra = fn(a, p1, 2.0, {}), rb = fn(b, p2, 2.0, {});
    EXPECT_EQ(rb.lhs, 4.0 * ra.lhs);
    EXPECT_EQ(rb.rhs_core, 4.0 * ra.rhs_core);
    EXPECT_EQ(*rb.implied_constant, *ra.implied_constant);
  }
}

TEST(Estimates, RejectsExponentAtMostOne) {
  const auto p = problem(1.0, 2, zero_driver(), constant_terminal(1.0));
  const Solution s = solve(p, full_tree(p));
  EXPECT_THROW(verify_zv_estimate(s, p, 1.0), InvalidArgument);
  EXPECT_THROW(verify_full_estimate(s, p, 0.5), InvalidArgument);
}

TEST(Estimates, FingerprintMismatch) {
  const auto p = problem(1.0, 2, zero_driver(), constant_terminal(1.0));
  const auto other = problem(1.0, 2, zero_driver(), constant_terminal(2.0));
  const Solution s = solve(p, full_tree(p));
  EXPECT_THROW(verify_full_estimate(s, other, 2.0), InvalidArgument);
}

TEST(Estimates, CeilingFailsWithoutAnomaly) {
  const auto p = problem(1.0, 4, zero_driver(), brownian_linear());
  const Solution s = solve(p, full_tree(p));
  const EstimateReport r = verify_zv_estimate(s, p, 2.0, EstimateOptions{1e-9, {}});
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.anomalous);
}

TEST(Uniqueness, ZeroDriverDistanceZero) {
  const auto p = problem(1.0, 6, zero_driver(), sin_plus_jumps(one_mark(), 1.0));
  const UniquenessReport r =
      uniqueness_experiment(p, full_tree(p), {{"zero", 0, 0, 0, {}}, {"perturbed", 10, 1, 1, {}}});
  ASSERT_FALSE(r.inconclusive);
  EXPECT_EQ(r.max_distance, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Uniqueness, ContractiveDriverWithinTolerance) {
  const auto p = problem(1.0, 6, affine_generator(0.0, 0.25, 0.0, 0.0, 0.0, one_mark(), 1, 2.0),
                         sin_plus_jumps(one_mark(), 1.0));
  const PicardOptions opts{.tol = 1e-10};
  const UniquenessReport r =
      uniqueness_experiment(p, full_tree(p), {{"zero", 0, 0, 0, {}}, {"perturbed", 10, 1, 1, {}}}, opts);
  ASSERT_FALSE(r.inconclusive);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_LE(r.pairs[0].distance, 2.0 * opts.tol);
  EXPECT_TRUE(r.pass);
}

TEST(Uniqueness, AcrossRegressionBases) {
  const auto p = problem(1.0, 4, zv_coupled_generator(0.25, 0.1, 0.1, one_mark(), 1, 2.0),
                         sin_plus_jumps(one_mark(), 1.0));
  const SolverContext ctx = make_mc_context(p, 20000, 9);
  const UniquenessReport r = uniqueness_experiment(
      p, ctx, {{"deg2", 0, 0, 0, BasisConfig{2, 1}}, {"deg3", 0, 0, 0, BasisConfig{3, 1}}}, PicardOptions{.tol = 1e-8});
  ASSERT_FALSE(r.inconclusive);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_GT(r.pairs[0].combined_se, 0.0);
  EXPECT_EQ(r.pairs[0].statistic, r.pairs[0].y0_difference);
  EXPECT_LE(r.pairs[0].y0_difference, 3.0 * r.pairs[0].combined_se + 2e-8);
}

TEST(Uniqueness, NeedsTwoRuns) {
  const auto p = problem(1.0, 2, zero_driver(), constant_terminal(1.0));
  EXPECT_THROW(uniqueness_experiment(p, full_tree(p), {{"only", 0, 0, 0, {}}}), InvalidArgument);
}

TEST(CiSuite, TwelveFiniteRowsWithinBaseline) {
  const CiSuiteReport r = run_ci_suite();
  ASSERT_EQ(r.rows.size(), 12u);
  EXPECT_TRUE(r.all_finite);
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.zv.pass) << row.name;
    EXPECT_TRUE(row.full.pass) << row.name;
  }
  EXPECT_TRUE(ci_within_baseline(r.max_implied_constant, kCiSuiteBaseline));
  EXPECT_NEAR(r.max_implied_constant, kCiSuiteBaseline, 1e-6);
}

TEST(CiSuite, BaselineAllowance) {
  EXPECT_TRUE(ci_within_baseline(1.10, 1.0));
  EXPECT_FALSE(ci_within_baseline(1.11, 1.0));
  EXPECT_TRUE(ci_within_baseline(0.5, 1.0));
}
