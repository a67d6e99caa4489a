#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "backward.hpp"
#include "bsdej/parallel.hpp"
#include "bsdej/solver.hpp"

namespace bsdej {

namespace {

// Exponent vectors over (W_1..W_d, N^1..N^m), total degree <= degree.
std::vector<std::vector<int>> monomials(int n_brownian, int n_jump, const BasisConfig& basis) {
  const int vars = n_brownian + n_jump;
  std::vector<std::vector<int>> out;
  std::vector<int> e(vars, 0);
  // Depth-first enumeration in graded order of insertion.
  auto rec = [&](auto&& self, int var, int remaining) -> void {
    if (var == vars) {
      out.push_back(e);
      return;
    }
    const int cap = var < n_brownian ? remaining : std::min(remaining, basis.jump_degree);
    for (int a = 0; a <= cap; ++a) {
      e[var] = a;
      self(self, var + 1, remaining - a);
    }
    e[var] = 0;
  };
  rec(rec, 0, basis.degree);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int x : a) sa += x;
    for (int x : b) sb += x;
    return sa < sb;
  });
  return out;
}

Eigen::MatrixXd design(const Solution& sol, int k, const std::vector<std::vector<int>>& terms) {
  const int n = static_cast<int>(sol.slots(k));
  const int d = sol.dim();
  const int m = sol.n_marks();
  const double t = sol.grid().node(k);
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(terms.size()));
  std::vector<double> feat(d + m);
  std::vector<double> scale(d + m), shift(d + m, 0.0);
  for (int l = 0; l < d; ++l) scale[l] = 1.0 / std::sqrt(t);
  for (int i = 0; i < m; ++i) {
    const double mean = sol.marks().intensity(i) * t;
    shift[d + i] = mean;
    scale[d + i] = 1.0 / std::sqrt(mean);
  }
  for (int p = 0; p < n; ++p) {
    const StateView s = sol.state(k, p);
    for (int l = 0; l < d; ++l) feat[l] = s.brownian[l] * scale[l];
    for (int i = 0; i < m; ++i) feat[d + i] = (s.jump_counts[i] - shift[d + i]) * scale[d + i];
    for (std::size_t c = 0; c < terms.size(); ++c) {
      double v = 1.0;
      for (int j = 0; j < d + m; ++j) {
        for (int a = 0; a < terms[c][j]; ++a) v *= feat[j];
      }
      x(p, static_cast<Eigen::Index>(c)) = v;
    }
  }
  return x;
}

bool all_equal(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] != v[0]) return false;
  }
  return true;
}

}  // namespace

namespace detail {

void mc_backward(const BSDEProblem& problem, Solution& sol, int k0, int k1, const Solution* frozen,
                 const BasisConfig& basis, const FixpointOptions& fixpoint, int threads) {
  check_step_size(problem);
  if (basis.degree < 0 || basis.jump_degree < 0) throw InvalidArgument("regression basis degree must be >= 0");
  const PathBatch& batch = *sol.batch();
  const PathStates& states = *sol.states();
  const int n = batch.n_paths();
  const int d = sol.dim();
  const int m = sol.n_marks();
  const double dt = sol.grid().dt();
  const auto full_terms = monomials(d, m, basis);
  const std::vector<std::vector<int>> constant_term{std::vector<int>(d + m, 0)};
  std::vector<double> p_jump(m);
  for (int i = 0; i < m; ++i) p_jump[i] = -std::expm1(-sol.marks().intensity(i) * dt);

  for (int k = k1 - 1; k >= k0; --k) {
    const auto& terms = sol.grid().node(k) > 0.0 ? full_terms : constant_term;
    const Eigen::MatrixXd x = design(sol, k, terms);
    Eigen::VectorXd next(n);
    for (int p = 0; p < n; ++p) next[p] = sol.y(k + 1, p);

    Eigen::VectorXd mean(n);
    Eigen::MatrixXd zv_fit = Eigen::MatrixXd::Zero(n, d + m);
    if (all_equal(next)) {
      // Regression reproduces constants; keep them exact.
      mean.setConstant(next[0]);
    } else {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
      if (qr.rank() < x.cols()) {
        std::ostringstream msg;
        msg << "regression design at step " << k << " is rank deficient (rank " << qr.rank() << " of "
            << x.cols() << ")";
        throw ConditioningError(msg.str(), k);
      }
      mean = x * qr.solve(next);
      Eigen::MatrixXd targets(n, d + m);
      for (int p = 0; p < n; ++p) {
        const double centered = next[p] - mean[p];
        const auto db = batch.increment(p, k);
        for (int l = 0; l < d; ++l) targets(p, l) = centered * db[l] / dt;
        for (int i = 0; i < m; ++i) {
          const double ind = states.step_jumps(p, k, i) > 0 ? 1.0 : 0.0;
          targets(p, d + i) = centered * (ind - p_jump[i]) / (p_jump[i] * (1.0 - p_jump[i]));
        }
      }
      zv_fit = x * qr.solve(targets);
    }

    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t p = begin; p < end; ++p) {
        auto z = sol.z(k, p);
        auto v = sol.v(k, p);
        for (int l = 0; l < d; ++l) z[l] = zv_fit(static_cast<Eigen::Index>(p), l);
        for (int i = 0; i < m; ++i) v[i] = zv_fit(static_cast<Eigen::Index>(p), d + i);
        const StateView state = sol.state(k, p);
        const auto fz = frozen ? frozen->z(k, p) : std::span<const double>(z);
        const auto fv = frozen ? frozen->v(k, p) : std::span<const double>(v);
        sol.y(k, p) = implicit_step(
            mean[static_cast<Eigen::Index>(p)], dt, [&](double y) { return problem.generator(state, y, fz, fv); },
            fixpoint, k);
      }
    });
  }
}

}  // namespace detail

double sectioned_y0_standard_error(const BSDEProblem& problem, const PathBatch& batch, const BasisConfig& basis,
                                   const FixpointOptions& fixpoint, int sections, int threads) {
  const int n = batch.n_paths();
  const int basis_size = static_cast<int>(monomials(batch.dim(), batch.n_marks(), basis).size());
  sections = std::min(sections, n / (4 * basis_size));
  if (sections < 2) return 0.0;
  std::vector<double> y0(sections);
  for (int b = 0; b < sections; ++b) {
    const int begin = static_cast<int>(static_cast<long long>(n) * b / sections);
    const int end = static_cast<int>(static_cast<long long>(n) * (b + 1) / sections);
    auto part = std::make_shared<const PathBatch>(batch.slice(begin, end));
    auto states = std::make_shared<const PathStates>(*part);
    Solution sol = Solution::on_paths(std::move(part), std::move(states), problem.fingerprint());
    detail::set_terminal(problem, sol);
    detail::mc_backward(problem, sol, 0, problem.grid.steps(), nullptr, basis, fixpoint, threads);
    y0[b] = sol.y0();
  }
  double mean = 0.0;
  for (double x : y0) mean += x;
  mean /= sections;
  double ss = 0.0;
  for (double x : y0) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (sections - 1) / sections);
}

Solution solve_mc_regression(const BSDEProblem& problem, std::shared_ptr<const PathBatch> batch, BasisConfig basis,
                             FixpointOptions fixpoint, int threads) {
  problem.validate();
  if (!batch || !(batch->grid() == problem.grid) || !batch->has_jumps() || !(batch->marks() == problem.marks) ||
      batch->dim() != problem.dim) {
    throw InvalidArgument("solve_mc_regression: batch does not match the problem's grid, marks or dimension");
  }
  auto states = std::make_shared<const PathStates>(*batch);
  Solution sol = Solution::on_paths(std::move(batch), std::move(states), problem.fingerprint());
  detail::set_terminal(problem, sol);
  detail::mc_backward(problem, sol, 0, problem.grid.steps(), nullptr, basis, fixpoint, threads);
  sol.set_y0_se(sectioned_y0_standard_error(problem, *sol.batch(), basis, fixpoint, 20, threads));
  return sol;
}

}  // namespace bsdej
