#include <cmath>

#include "bsdej/errors.hpp"
#include "bsdej/solver.hpp"

namespace bsdej {

namespace {

struct TailTerm {
  double mean = 0.0;
  double se = 0.0;
};

// E[|xi| 1{|xi| > n} + sum_k |f0_k| 1{|f0_k| > n} dt] over the sample.
TailTerm data_tail(const SolutionSample& sample, double n, double dt, int steps) {
  const int paths = sample.n_paths;
  std::vector<double> g(paths);
  for (int p = 0; p < paths; ++p) {
    const double x = std::abs(sample.xi[p]);
    double acc = x > n ? x : 0.0;
    for (int k = 0; k < steps; ++k) {
      const double f = std::abs(sample.f0[static_cast<std::size_t>(p) * steps + k]);
      if (f > n) acc += f * dt;
    }
    g[p] = acc;
  }
  TailTerm out;
  const auto w = sample.y.weights();
  if (!w.empty()) {
    for (int p = 0; p < paths; ++p) out.mean += w[p] * g[p];
    return out;
  }
  for (double x : g) out.mean += x;
  out.mean /= paths;
  if (paths > 1) {
    double ss = 0.0;
    for (double x : g) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (paths - 1) / paths);
  }
  return out;
}

}  // namespace

LadderReport truncation_ladder_solve(const BSDEProblem& problem, const SolverContext& ctx,
                                     const LadderOptions& options) {
  const auto& levels = options.n_list;
  if (levels.empty()) throw InvalidArgument("ladder: n_list is empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0) || !std::isfinite(levels[i])) throw InvalidArgument("ladder: n_list entries must be positive");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw InvalidArgument("ladder: n_list must be strictly increasing");
  }
  problem.validate();

  LadderReport report;
  std::vector<Solution> solutions;
  solutions.reserve(levels.size());
  for (double n : levels) {
    BSDEProblem truncated = truncate_problem(problem, n);
    truncated.terminal.p = 2.0;
    solutions.push_back(solve(truncated, ctx));
    report.rungs.push_back(LadderRung{n, solutions.back().y0(), solutions.back().y0_se()});
  }

  const PathSet paths = make_path_set(solutions.front(), ctx.paths);
  report.estimator = paths.estimator;
  report.n_paths = paths.n_paths;
  std::vector<SolutionSample> samples;
  samples.reserve(solutions.size());
  for (const auto& s : solutions) samples.push_back(sample_solution(s, problem, paths));
  // The data tail is computed from the untruncated problem.
  const SolutionSample data = sample_solution(solutions.front(), problem, paths);

  const int steps = problem.grid.steps();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const TailTerm tail = data_tail(data, levels[i], problem.grid.dt(), steps);
    for (std::size_t j = i + 1; j < levels.size(); ++j) {
      const ProcessSample diff = samples[j].y.minus(samples[i].y);
      const ClassDEstimate est = class_d_norm(diff, StoppingFamily::default_for(diff));
      report.pairs.push_back(
          LadderPair{levels[i], levels[j], est.value, est.se, est.best_rule, tail.mean, tail.se});
    }
  }
  if (report.pairs.empty()) {
    report.cauchy = true;
  } else {
    // Consecutive pair at the top of the ladder.
    const LadderPair* top = nullptr;
    for (const auto& p : report.pairs) {
      if (p.n == levels[levels.size() - 2] && p.m == levels.back()) top = &p;
    }
    report.cauchy = top && top->distance < options.tol && top->bound < options.tol;
  }
  report.final_solution = std::make_shared<Solution>(std::move(solutions.back()));
  return report;
}

}  // namespace bsdej
