#include <algorithm>
#include <array>

#include "backward.hpp"
#include "bsdej/parallel.hpp"
#include "bsdej/solver.hpp"

namespace bsdej {

const char* to_string(Method m) noexcept { return m == Method::tree ? "tree" : "mc"; }

namespace detail {

void set_terminal(const BSDEProblem& problem, Solution& sol) {
  const int n = sol.grid().steps();
  const std::size_t slots = sol.slots(n);
  for (std::size_t s = 0; s < slots; ++s) sol.y(n, s) = problem.terminal(sol.state(n, s));
}

void tree_backward(const BSDEProblem& problem, Solution& sol, int k0, int k1, const Solution* frozen,
                   const FixpointOptions& fixpoint, int threads) {
  check_step_size(problem);
  const ScenarioTree& tree = *sol.tree();
  const double dt = tree.grid().dt();
  for (int k = k1 - 1; k >= k0; --k) {
    const auto next = sol.y_layer(k + 1);
    parallel_for(tree.layer_size(k), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t node = begin; node < end; ++node) {
        double mean = 0.0;
        auto z = sol.z(k, node);
        auto v = sol.v(k, node);
        project_node(tree, k, node, next, mean, z, v);
        const StateView state = tree.state(k, node);
        const auto fz = frozen ? frozen->z(k, node) : std::span<const double>(z);
        const auto fv = frozen ? frozen->v(k, node) : std::span<const double>(v);
        sol.y(k, node) = implicit_step(
            mean, dt, [&](double y) { return problem.generator(state, y, fz, fv); }, fixpoint, k);
      }
    });
  }
}

}  // namespace detail

Solution SolverContext::blank(const BSDEProblem& problem) const {
  if (method == Method::tree) return Solution::on_tree(tree, problem.fingerprint());
  return Solution::on_paths(batch, states, problem.fingerprint());
}

SolverContext make_tree_context(const BSDEProblem& problem, TreeOptions options) {
  SolverContext ctx;
  ctx.method = Method::tree;
  ctx.tree = std::make_shared<const ScenarioTree>(problem.grid, problem.marks, problem.dim, options);
  return ctx;
}

SolverContext make_mc_context(const BSDEProblem& problem, int n_paths, std::uint64_t seed, BasisConfig basis,
                              int threads) {
  SolverContext ctx;
  ctx.method = Method::mc;
  ctx.batch = std::make_shared<const PathBatch>(
      simulate_paths(problem.grid, problem.dim, problem.marks, n_paths, seed, threads));
  ctx.states = std::make_shared<const PathStates>(*ctx.batch);
  ctx.basis = basis;
  ctx.threads = threads;
  return ctx;
}

Solution solve_tree(const BSDEProblem& problem, std::shared_ptr<const ScenarioTree> tree, FixpointOptions fixpoint,
                    int threads) {
  problem.validate();
  if (!tree || !(tree->grid() == problem.grid) || !(tree->marks() == problem.marks) || tree->dim() != problem.dim) {
    throw InvalidArgument("solve_tree: tree does not match the problem's grid, marks or dimension");
  }
  Solution sol = Solution::on_tree(std::move(tree), problem.fingerprint());
  detail::set_terminal(problem, sol);
  detail::tree_backward(problem, sol, 0, problem.grid.steps(), nullptr, fixpoint, threads);
  return sol;
}

Solution solve(const BSDEProblem& problem, const SolverContext& ctx) {
  if (ctx.method == Method::tree) return solve_tree(problem, ctx.tree, ctx.fixpoint, ctx.threads);
  return solve_mc_regression(problem, ctx.batch, ctx.basis, ctx.fixpoint, ctx.threads);
}

}  // namespace bsdej
