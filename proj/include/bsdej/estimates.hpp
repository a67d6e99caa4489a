#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsdej/generators.hpp"
#include "bsdej/solution.hpp"
#include "bsdej/solver.hpp"

namespace bsdej {

/// One side-by-side evaluation of an a priori inequality lhs <= C rhs_core.
struct EstimateReport {
  std::string kind;  // "zv" or "full"
  double lhs = 0.0;
  double rhs_core = 0.0;
  /// lhs / rhs_core; 0 when both vanish; absent when only rhs_core vanishes.
  std::optional<double> implied_constant;
  double p = 2.0;
  double kappa = 0.0;
  double horizon = 0.0;
  std::string fingerprint;
  std::string estimator;
  int n_paths = 0;
  double ceiling = 1e3;
  bool anomalous = false;
  bool pass = false;
};

struct EstimateOptions {
  double ceiling = 1e3;
  PathSetOptions paths;
};

/// lhs = E[(int |Z|^2 ds)^{p/2} + int sum_i |V(e_i)|^p lambda_i ds],
/// rhs_core = E[sup_t |Y_t|^p + (int |f(s,0,0,0)| ds)^p].
EstimateReport verify_zv_estimate(const Solution& solution, const BSDEProblem& problem, double p,
                                  const EstimateOptions& options = {});

/// lhs = E[sup_t |Y_t|^p + (int |Z|^2 ds)^{p/2} + int sum_i |V(e_i)|^p lambda_i ds],
/// rhs_core = E[|xi|^p + (int |f(s,0,0,0)| ds)^p]. Requires p > 1.
EstimateReport verify_full_estimate(const Solution& solution, const BSDEProblem& problem, double p,
                                    const EstimateOptions& options = {});

/// A starting point (and optionally a regression basis) for one Picard run.
struct Perturbation {
  std::string label;
  double init_y = 0.0;
  double init_z = 0.0;
  double init_v = 0.0;
  std::optional<BasisConfig> basis;
};

struct UniquenessPair {
  std::string a;
  std::string b;
  /// ||Y^a - Y^b||_{S^q} on the common path set.
  double distance = 0.0;
  double y0_difference = 0.0;
  /// sqrt(se_a^2 + se_b^2); zero on trees.
  double combined_se = 0.0;
  /// Distance the pass test uses: the S^q distance for a common basis, |dY_0| across bases.
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct UniquenessReport {
  std::vector<std::string> labels;
  std::vector<double> y0;
  std::vector<double> y0_se;
  std::vector<UniquenessPair> pairs;
  double max_distance = 0.0;
  double tol = 0.0;
  double q = 1.5;
  bool inconclusive = false;
  bool pass = false;
  std::string message;
};

/// Runs every perturbation by Picard iteration, chained over plan when given.
UniquenessReport uniqueness_experiment(const BSDEProblem& problem, const SolverContext& ctx,
                                       const std::vector<Perturbation>& perturbations,
                                       const PicardOptions& options = {}, const SubdivisionPlan* plan = nullptr);

/// Seed-pinned suite: 3 generators x horizons {0.5, 1} x p {1.5, 2} on the tree.
struct CiInstance {
  std::string name;
  std::string generator;
  double horizon = 1.0;
  double p = 2.0;
  BSDEProblem problem;
};

std::vector<CiInstance> ci_suite_instances();

struct CiRow {
  std::string name;
  std::string generator;
  double horizon = 0.0;
  double p = 0.0;
  double y0 = 0.0;
  EstimateReport zv;
  EstimateReport full;
};

struct CiSuiteReport {
  std::vector<CiRow> rows;
  double max_implied_constant = 0.0;
  bool all_finite = true;
};

CiSuiteReport run_ci_suite(const EstimateOptions& options = {}, int threads = 1);

/// Frozen maximum implied constant of the suite; a run may exceed it by at most 10%.
inline constexpr double kCiSuiteBaseline = 4.072100449;
bool ci_within_baseline(double current, double baseline, double allowance = 0.10);

}  // namespace bsdej
