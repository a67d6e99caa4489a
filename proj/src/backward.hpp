#pragma once

// Backward induction kernels shared by the direct, Picard and chained solvers.

#include <cmath>
#include <sstream>
#include <string>

#include "bsdej/errors.hpp"
#include "bsdej/generators.hpp"
#include "bsdej/solution.hpp"
#include "bsdej/solver.hpp"

namespace bsdej::detail {

/// y = e + f(y) dt by fixed-point iteration. The stop test is relative to
/// the operands, so scaling all data by a power of two scales every iterate
/// exactly.
template <typename F>
double implicit_step(double e, double dt, F&& f, const FixpointOptions& options, int step) {
  double y = e;
  for (int it = 0; it < options.max_iter; ++it) {
    const double fd = f(y) * dt;
    const double next = e + fd;
    if (!std::isfinite(next)) {
      std::ostringstream msg;
      msg << "implicit step at step " << step << ": non-finite iterate";
      throw NumericError(msg.str());
    }
    const double scale = std::max({std::abs(next), std::abs(e), std::abs(fd)});
    if (std::abs(next - y) <= options.rtol * scale + 1e-300) return next;
    y = next;
  }
  std::ostringstream msg;
  msg << "implicit step at step " << step << ": fixed point not reached in " << options.max_iter << " iterations";
  throw NumericError(msg.str());
}

inline void check_step_size(const BSDEProblem& problem) {
  const double r = problem.generator.kappa * problem.grid.dt();
  if (!(r < 1.0)) {
    std::ostringstream msg;
    msg << "kappa * dt = " << r << " >= 1; refine the grid";
    throw StepSizeError(msg.str());
  }
}

/// Fills Y, Z, V on layers [k0, k1) of a tree solution from Y on layer k1.
/// With frozen set, the driver sees frozen's (Z, V) instead of the projected ones.
void tree_backward(const BSDEProblem& problem, Solution& sol, int k0, int k1, const Solution* frozen,
                   const FixpointOptions& fixpoint, int threads);

/// Same on simulated paths, conditional expectations by regression.
void mc_backward(const BSDEProblem& problem, Solution& sol, int k0, int k1, const Solution* frozen,
                 const BasisConfig& basis, const FixpointOptions& fixpoint, int threads);

inline void backward(const BSDEProblem& problem, const SolverContext& ctx, Solution& sol, int k0, int k1,
                     const Solution* frozen) {
  if (ctx.method == Method::tree) {
    tree_backward(problem, sol, k0, k1, frozen, ctx.fixpoint, ctx.threads);
  } else {
    mc_backward(problem, sol, k0, k1, frozen, ctx.basis, ctx.fixpoint, ctx.threads);
  }
}

/// Y on the last layer set to xi.
void set_terminal(const BSDEProblem& problem, Solution& sol);

}  // namespace bsdej::detail
