#include <cmath>

#include <gtest/gtest.h>

#include "bsdej/errors.hpp"
#include "bsdej/randomness.hpp"
#include "bsdej/spaces_norms.hpp"

using namespace bsdej;

namespace {

/// Y_t = B_t at every node, uniformly weighted.
ProcessSample brownian_paths(const TimeGrid& g, int n, std::uint64_t seed) {
  const PathBatch b = simulate_brownian(g, 1, n, seed);
  std::vector<double> y(static_cast<std::size_t>(n) * (g.steps() + 1));
  for (int p = 0; p < n; ++p) {
    double w = 0.0;
    y[p * (g.steps() + 1)] = 0.0;
    for (int j = 0; j < g.steps(); ++j) {
      w += b.increment(p, j)[0];
      y[p * (g.steps() + 1) + j + 1] = w;
    }
  }
  return ProcessSample(g, n, g.steps() + 1, 1, std::move(y));
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

TEST(SpNorm, Constant) {
  const TimeGrid g(1.0, 4);
  for (double p : {0.5, 1.0, 2.0, 3.7}) {
    EXPECT_NEAR(sp_norm(ProcessSample::constant(g, 5, -2.5), p), 2.5, 1e-14);
    EXPECT_EQ(sp_norm(ProcessSample::constant(g, 5, 0.0), p), 0.0);
  }
  EXPECT_THROW(sp_norm(ProcessSample::constant(g, 5, 1.0), 0.0), InvalidArgument);
}

TEST(SpNorm, BrownianSupremum) {
  // E[sup_{t<=1} |B_t|^2] = E[1/tau] with tau the exit time of (-1, 1), which
  // equals int_0^inf s / cosh(s) ds = 2 G (Catalan's constant).
  const double catalan = 0.915965594177219015;
  const TimeGrid g(1.0, 1000);
  const ProcessSample y = brownian_paths(g, 100000, 21);
  EXPECT_NEAR(sp_norm(y, 2.0), std::sqrt(2.0 * catalan), 0.03 * std::sqrt(2.0 * catalan));
}

TEST(MpNorm, Examples) {
  const TimeGrid g4(4.0, 8);
  EXPECT_EQ(mp_norm(ProcessSample(g4, 3, 8, 1, std::vector<double>(24, 0.0)), 2.0), 0.0);
  for (double p : {1.0, 2.0, 5.0}) {
    EXPECT_NEAR(mp_norm(ProcessSample(g4, 3, 8, 1, std::vector<double>(24, 1.0)), p), 2.0, 1e-14);
  }
  const TimeGrid g1(1.0, 5);
  EXPECT_NEAR(mp_norm(ProcessSample(g1, 2, 5, 2, std::vector<double>(20, 1.0)), 2.0), std::sqrt(2.0), 1e-14);
  EXPECT_THROW(mp_norm(ProcessSample(g1, 2, 5, 2, std::vector<double>(20, 1.0)), -1.0), InvalidArgument);
}

TEST(ClassD, ConstantAnyFamily) {
  const TimeGrid g(1.0, 4);
  const auto y = ProcessSample::constant(g, 10, -3.0);
  EXPECT_NEAR(class_d_norm(y, StoppingFamily::deterministic_times(4)).value, 3.0, 1e-15);
  EXPECT_NEAR(class_d_norm(y, StoppingFamily({{StoppingRule::Kind::hitting, 0, 1.0}})).value, 3.0, 1e-15);
  EXPECT_THROW(class_d_norm(y, StoppingFamily()), InvalidArgument);
}

TEST(ClassD, TerminalTimeAttainsMeanAbsTerminal) {
  const TimeGrid g(1.0, 10);
  const ProcessSample y = brownian_paths(g, 2000, 4);
  double mean_abs = 0.0;
  for (int p = 0; p < 2000; ++p) mean_abs += std::abs(y(p, 10)) / 2000.0;
  const auto est = class_d_norm(y, StoppingFamily({{StoppingRule::Kind::deterministic, 10, 0.0}}));
  EXPECT_NEAR(est.value, mean_abs, 1e-14);
  EXPECT_TRUE(est.lower_bound);
}

TEST(ClassD, BrownianWithHittingRule) {
  const TimeGrid g(1.0, 20);
  const ProcessSample y = brownian_paths(g, 100000, 5);
  StoppingFamily family({{StoppingRule::Kind::deterministic, 0, 0.0},
                         {StoppingRule::Kind::deterministic, 10, 0.0},
                         {StoppingRule::Kind::deterministic, 20, 0.0},
                         {StoppingRule::Kind::hitting, 0, 1.0}});
  const double half_normal = std::sqrt(2.0 / M_PI);
  EXPECT_GE(class_d_norm(y, family).value, half_normal * 0.98);
}

TEST(ClassD, MonotoneInFamily) {
  const TimeGrid g(1.0, 12);
  const ProcessSample y = brownian_paths(g, 3000, 6);
  StoppingFamily family;
  double last = 0.0;
  for (const StoppingRule& r : StoppingFamily::default_for(y).rules()) {
    family.add(r);
    const double v = class_d_norm(y, family).value;
    EXPECT_GE(v, last);
    last = v;
  }
}

TEST(ClassD, HittingRulesAreNonAnticipative) {
  // Changing a path after its hitting time never changes the stopped node.
  const TimeGrid g(1.0, 8);
  const ProcessSample y = brownian_paths(g, 500, 8);
  const StoppingRule rule{StoppingRule::Kind::hitting, 0, 0.5};
  std::vector<double> v(y.values().begin(), y.values().end());
  for (int p = 0; p < 500; ++p) {
    const int tau = rule.apply(y, p);
    for (int k = tau + 1; k <= 8; ++k) v[p * 9 + k] = 100.0;
  }
  const ProcessSample changed(g, 500, 9, 1, v);
  for (int p = 0; p < 500; ++p) EXPECT_EQ(rule.apply(changed, p), rule.apply(y, p));
}

TEST(UiProfile, BoundedAndConstant) {
  const TimeGrid g(1.0, 4);
  const auto family = StoppingFamily::deterministic_times(4);
  std::vector<double> vals(3 * 5);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::sin(static_cast<double>(i));
  const ProcessSample bounded(g, 3, 5, 1, vals);
  const std::vector<double> two{2.0};
  EXPECT_EQ(uniform_integrability_profile(bounded, family, two)[0].second, 0.0);
  const auto c = ProcessSample::constant(g, 3, 3.0);
  const std::vector<double> levels{1.0, 4.0};
  const auto prof = uniform_integrability_profile(c, family, levels);
  EXPECT_NEAR(prof[0].second, 3.0, 1e-15);
  EXPECT_EQ(prof[1].second, 0.0);
}

TEST(UiProfile, NormalTailMean) {
  const TimeGrid g(1.0, 1);
  const int n = 100000;
  const ProcessSample y = brownian_paths(g, n, 9);
  const StoppingFamily family({{StoppingRule::Kind::deterministic, 1, 0.0}});
  const std::vector<double> levels{1.0, 2.0, 3.0};
  const auto prof = uniform_integrability_profile(y, family, levels);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double k = levels[i];
    // E[|G| 1{|G|>K}] = 2 phi(K), E[G^2 1{|G|>K}] = 2 (K phi(K) + 1 - Phi(K)).
    const double m1 = 2.0 * normal_pdf(k);
    const double m2 = 2.0 * (k * normal_pdf(k) + 0.5 * std::erfc(k / std::sqrt(2.0)));
    const double se = std::sqrt((m2 - m1 * m1) / n);
    EXPECT_LT(std::abs(prof[i].second - m1), 3.0 * se) << "K=" << k;
  }
}

TEST(UiProfile, NonIncreasingInLevel) {
  const TimeGrid g(1.0, 10);
  const ProcessSample y = brownian_paths(g, 4000, 10);
  std::vector<double> levels;
  for (int i = 1; i <= 30; ++i) levels.push_back(0.1 * i);
  const auto prof = uniform_integrability_profile(y, StoppingFamily::default_for(y), levels);
  for (std::size_t i = 1; i < prof.size(); ++i) EXPECT_LE(prof[i].second, prof[i - 1].second);
}

TEST(NormProperties, HomogeneityOnFixedSamples) {
  const TimeGrid g(1.0, 10);
  const ProcessSample y = brownian_paths(g, 1000, 11);
  const auto family = StoppingFamily::deterministic_times(10);
  for (double c : {2.0, -0.5, 4.0}) {
    // Powers of two scale every intermediate exactly.
    EXPECT_EQ(sp_norm(y.scaled(c), 2.0), std::abs(c) * sp_norm(y, 2.0));
    EXPECT_EQ(mp_norm(y.scaled(c), 2.0), std::abs(c) * mp_norm(y, 2.0));
    EXPECT_EQ(class_d_norm(y.scaled(c), family).value, std::abs(c) * class_d_norm(y, family).value);
  }
  const double c = 1.7;
  EXPECT_NEAR(sp_norm(y.scaled(c), 1.5), c * sp_norm(y, 1.5), 1e-14);
}

TEST(NormProperties, SpMonotoneInP) {
  const TimeGrid g(1.0, 10);
  const ProcessSample y = brownian_paths(g, 1000, 12);
  EXPECT_LE(sp_norm(y, 1.0), sp_norm(y, 2.0));
  std::vector<double> w(1000);
  for (int i = 0; i < 1000; ++i) w[i] = (1.0 + i % 3) / 2000.0;
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  const ProcessSample weighted(g, 1000, 11, 1, std::vector<double>(y.values().begin(), y.values().end()), w);
  EXPECT_LE(sp_norm(weighted, 1.0), sp_norm(weighted, 2.0));
}
