#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bsdej/generators.hpp"
#include "bsdej/randomness.hpp"
#include "bsdej/scenario_tree.hpp"
#include "bsdej/solution.hpp"

namespace bsdej {

enum class Method { tree, mc };

const char* to_string(Method m) noexcept;

/// Inner fixed point y = E + f(y) dt, iterated until the update is below
/// rtol relative to the magnitudes involved.
struct FixpointOptions {
  double rtol = 1e-14;
  int max_iter = 500;
};

/// Polynomial basis in the standardized state: W_l / sqrt(t) and
/// (N^i_t - lambda_i t) / sqrt(lambda_i t). Total degree <= degree with each
/// jump exponent <= jump_degree.
struct BasisConfig {
  int degree = 2;
  int jump_degree = 1;
};

/// Everything a solve needs beyond the problem: the discretization of the
/// noise and the numerical knobs.
struct SolverContext {
  Method method = Method::tree;
  std::shared_ptr<const ScenarioTree> tree;
  std::shared_ptr<const PathBatch> batch;
  std::shared_ptr<const PathStates> states;
  BasisConfig basis;
  FixpointOptions fixpoint;
  PathSetOptions paths;
  int threads = 1;

  /// Zero-filled solution on this context's representation.
  Solution blank(const BSDEProblem& problem) const;
};

SolverContext make_tree_context(const BSDEProblem& problem, TreeOptions options = {});
SolverContext make_mc_context(const BSDEProblem& problem, int n_paths, std::uint64_t seed, BasisConfig basis = {},
                              int threads = 1);

/// Exact backward induction on the tree. Throws StepSizeError when
/// kappa * dt >= 1 and NumericError when a node's fixed point stalls.
Solution solve_tree(const BSDEProblem& problem, std::shared_ptr<const ScenarioTree> tree,
                    FixpointOptions fixpoint = {}, int threads = 1);

/// Least-squares regression solver on simulated paths. Throws
/// ConditioningError naming the step when a design matrix is rank deficient.
Solution solve_mc_regression(const BSDEProblem& problem, std::shared_ptr<const PathBatch> batch,
                             BasisConfig basis = {}, FixpointOptions fixpoint = {}, int threads = 1);

/// Dispatches on ctx.method.
Solution solve(const BSDEProblem& problem, const SolverContext& ctx);

/// Batch-means standard error of the regression estimate of Y_0: the paths
/// are split into `sections` contiguous blocks, each block is solved on its
/// own, and the SE is sd(block Y_0) / sqrt(sections). Returns 0 when there
/// are fewer than 2 sections of at least 4 basis sizes each.
double sectioned_y0_standard_error(const BSDEProblem& problem, const PathBatch& batch, const BasisConfig& basis,
                                   const FixpointOptions& fixpoint, int sections = 20, int threads = 1);

// ---------------------------------------------------------------------------
// Picard iteration with frozen (z, v).

struct PicardOptions {
  double tol = 1e-10;
  int max_iter = 200;
  /// Norm index; when unset it is derived from the generator's alpha.
  std::optional<double> q;
  double init_y = 0.0;
  double init_z = 0.0;
  double init_v = 0.0;
  /// Divergence is declared after this many consecutive ratios >= 1.
  int divergence_window = 3;
};

/// q = clamp(0.95 / alpha, 1.05, 1.95), or 1.5 without alpha.
double picard_norm_index(const GeneratorSpec& generator);

struct PicardTrace {
  double q = 1.5;
  double interval_start = 0.0;
  double interval_length = 0.0;
  /// dist[n] = ||Y^{n+1} - Y^n||_{S^q} + ||Z^{n+1} - Z^n||_{M^q} + ||V^{n+1} - V^n||_{L^q}
  std::vector<TripleDistance> dist;
  /// ratio[n] = dist[n+1] / dist[n] for n >= 0 where dist[n] > 0.
  std::vector<std::optional<double>> ratio;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string message;

  double total(int n) const { return dist.at(n).total(); }
};

struct PicardResult {
  Solution solution;
  /// One trace per interval, ordered from the last interval back to the first.
  std::vector<PicardTrace> traces;
  bool converged = false;
  bool diverged = false;
  std::string message;
};

// ---------------------------------------------------------------------------
// Horizon subdivision.

struct IntervalCertificate {
  double start = 0.0;
  double end = 0.0;
  double q = 1.5;
  double kappa = 0.0;
  double c_emp = 0.0;
  /// kappa * c_emp * (end - start)^{1 - q/2}
  double bound = 0.0;
  bool certified = false;
};

struct SubdivisionPlan {
  std::vector<double> breakpoints;  // 0 = s_0 < ... < s_K = T
  std::vector<int> nodes;           // grid indices of the breakpoints, when snapped
  std::vector<IntervalCertificate> intervals;
  double safety = 0.5;
  int requested = 1;  // K before snapping to the grid

  int count() const noexcept { return static_cast<int>(breakpoints.size()) - 1; }
};

/// Smallest K with kappa * c_emp * (T/K)^{1 - q/2} <= safety, uniform breakpoints.
SubdivisionPlan subdivide_horizon(double horizon, double kappa, double q, double c_emp, double safety);

/// Single-interval plan covering [0, T].
SubdivisionPlan trivial_plan(double horizon, double kappa, double q);

/// Moves breakpoints to the nearest grid nodes (dropping duplicates) and
/// recomputes every certificate for the actual interval lengths.
SubdivisionPlan snap_to_grid(const SubdivisionPlan& plan, const TimeGrid& grid);

/// c_emp = r / (kappa * T^{1 - q/2}) with r the largest measured ratio r_n,
/// n >= 1, of a pilot trace (r_0 when it is the only one).
double calibrate_c_emp(const PicardTrace& pilot, double kappa, double horizon);

/// Solves interval by interval backward in time, each interval by Picard
/// iteration with the previous interval's Y at its right end as terminal value.
PicardResult chained_solve(const BSDEProblem& problem, const SubdivisionPlan& plan, const SolverContext& ctx,
                           const PicardOptions& options = {});

/// chained_solve on the single-interval plan.
PicardResult picard_solve(const BSDEProblem& problem, const SolverContext& ctx, const PicardOptions& options = {});

// ---------------------------------------------------------------------------
// Truncation ladder.

struct LadderRung {
  double n = 0.0;
  double y0 = 0.0;
  double y0_se = 0.0;
};

struct LadderPair {
  double n = 0.0;
  double m = 0.0;  // m > n
  /// Class-D distance sup_tau E|Y^m_tau - Y^n_tau| over the stopping family.
  double distance = 0.0;
  double distance_se = 0.0;
  std::string best_rule;
  /// E[|xi| 1{|xi| > n} + int |f(s,0)| 1{|f(s,0)| > n} ds] on the same path set.
  double bound = 0.0;
  double bound_se = 0.0;
};

struct LadderOptions {
  std::vector<double> n_list;
  double tol = 1e-3;
};

struct LadderReport {
  std::vector<LadderRung> rungs;
  std::vector<LadderPair> pairs;
  std::string estimator;
  int n_paths = 0;
  /// Distances between consecutive rungs and their bounds both below tol at the top.
  bool cauchy = false;
  std::shared_ptr<Solution> final_solution;
};

/// Solves q_n-truncated problems for each n and compares them pairwise.
/// Throws InvalidArgument unless n_list is strictly increasing and positive.
LadderReport truncation_ladder_solve(const BSDEProblem& problem, const SolverContext& ctx,
                                     const LadderOptions& options);

}  // namespace bsdej
