#include "bsdej/solution.hpp"

#include <algorithm>
#include <cmath>

#include "bsdej/errors.hpp"

namespace bsdej {

const char* to_string(Representation r) noexcept { return r == Representation::tree ? "tree" : "paths"; }

Solution::Solution(Representation r, TimeGrid grid, MarkSpace marks, int dim, std::string fingerprint)
    : representation_(r),
      grid_(grid),
      marks_(std::move(marks)),
      dim_(dim),
      n_marks_(marks_.size()),
      fingerprint_(std::move(fingerprint)) {}

Solution Solution::on_tree(std::shared_ptr<const ScenarioTree> tree, std::string fingerprint) {
  if (!tree) throw InvalidArgument("solution: null tree");
  Solution s(Representation::tree, tree->grid(), tree->marks(), tree->dim(), std::move(fingerprint));
  s.tree_ = std::move(tree);
  s.allocate();
  return s;
}

Solution Solution::on_paths(std::shared_ptr<const PathBatch> batch, std::shared_ptr<const PathStates> states,
                            std::string fingerprint) {
  if (!batch || !states) throw InvalidArgument("solution: null path batch");
  if (!batch->has_jumps()) throw InvalidArgument("solution: path batch needs a jump part");
  Solution s(Representation::paths, batch->grid(), batch->marks(), batch->dim(), std::move(fingerprint));
  s.batch_ = std::move(batch);
  s.states_ = std::move(states);
  s.allocate();
  return s;
}

void Solution::allocate() {
  const int steps = grid_.steps();
  y_.resize(steps + 1);
  z_.resize(steps);
  v_.resize(steps);
  for (int k = 0; k <= steps; ++k) {
    const std::size_t n = slots(k);
    y_[k].assign(n, 0.0);
    if (k < steps) {
      z_[k].assign(n * dim_, 0.0);
      v_[k].assign(n * n_marks_, 0.0);
    }
  }
}

std::size_t Solution::slots(int k) const {
  return tree_ ? tree_->layer_size(k) : static_cast<std::size_t>(batch_->n_paths());
}

StateView Solution::state(int k, std::size_t slot) const {
  return tree_ ? tree_->state(k, slot) : states_->at(static_cast<int>(slot), k);
}

void Solution::fill(int k0, int k1, double y, double z, double v, bool include_last) {
  for (int k = k0; k < k1; ++k) {
    std::fill(y_[k].begin(), y_[k].end(), y);
    std::fill(z_[k].begin(), z_[k].end(), z);
    std::fill(v_[k].begin(), v_[k].end(), v);
  }
  if (include_last) std::fill(y_[k1].begin(), y_[k1].end(), y);
}

void Solution::copy_range(const Solution& other, int k0, int k1) {
  for (int k = k0; k <= k1; ++k) {
    y_[k] = other.y_[k];
    if (k < k1) {
      z_[k] = other.z_[k];
      v_[k] = other.v_[k];
    }
  }
}

double Solution::y0() const {
  // On paths every slot of layer 0 shares the deterministic initial state.
  const auto& layer = y_[0];
  if (tree_) return layer[0];
  double s = 0.0;
  for (double x : layer) s += x;
  return s / static_cast<double>(layer.size());
}

bool Solution::bit_equal(const Solution& other) const {
  return y_ == other.y_ && z_ == other.z_ && v_ == other.v_;
}

PathSet enumerate_tree_paths(const ScenarioTree& tree) {
  const int steps = tree.depth();
  const int branches = tree.branching();
  const double count = std::pow(static_cast<double>(branches), steps);
  if (count > 1e8) throw ResourceLimit("path enumeration: too many tree histories");
  const auto n = static_cast<std::size_t>(count);
  PathSet set;
  set.n_paths = static_cast<int>(n);
  set.steps = steps;
  set.slots.resize(n * (steps + 1));
  set.weights.resize(n);
  set.estimator = "tree";
  std::vector<int> digits(steps, 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t rest = p;
    for (int k = steps - 1; k >= 0; --k) {
      digits[k] = static_cast<int>(rest % branches);
      rest /= branches;
    }
    std::uint32_t* row = set.slots.data() + p * (steps + 1);
    row[0] = 0;
    double w = 1.0;
    for (int k = 0; k < steps; ++k) {
      row[k + 1] = static_cast<std::uint32_t>(tree.child(k, row[k], digits[k]));
      w *= tree.branch_probability(digits[k]);
    }
    set.weights[p] = w;
  }
  return set;
}

PathSet sample_tree_paths(const ScenarioTree& tree, int n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw InvalidArgument("tree path sampling: n_paths must be >= 1");
  const int steps = tree.depth();
  const int d = tree.dim();
  const int m = tree.n_marks();
  PathSet set;
  set.n_paths = n_paths;
  set.steps = steps;
  set.slots.resize(static_cast<std::size_t>(n_paths) * (steps + 1));
  set.estimator = "tree-sampled";
  set.seed = seed;
  const CounterRng rng(seed, Stream::tree_paths);
  for (int p = 0; p < n_paths; ++p) {
    std::uint32_t* row = set.slots.data() + static_cast<std::size_t>(p) * (steps + 1);
    row[0] = 0;
    for (int k = 0; k < steps; ++k) {
      const auto bits = rng.raw(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(k), 0);
      const int pattern = static_cast<int>(bits[0] & ((1u << d) - 1u));
      const double u = rng.uniforms(static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(k), 1)[0];
      int jump = 0;
      double acc = tree.jump_probability(0);
      while (u > acc && jump < m) {
        ++jump;
        acc += tree.jump_probability(jump);
      }
      row[k + 1] = static_cast<std::uint32_t>(tree.child(k, row[k], tree.branch_index(pattern, jump)));
    }
  }
  return set;
}

PathSet make_path_set(const Solution& solution, const PathSetOptions& options) {
  if (solution.representation() == Representation::paths) {
    PathSet set;
    set.n_paths = solution.batch()->n_paths();
    set.steps = solution.grid().steps();
    set.estimator = "mc";
    set.seed = solution.batch()->seed();
    return set;
  }
  const ScenarioTree& tree = *solution.tree();
  const double count = std::pow(static_cast<double>(tree.branching()), tree.depth());
  if (count <= static_cast<double>(options.enumerate_cap)) return enumerate_tree_paths(tree);
  return sample_tree_paths(tree, options.n_sample, options.seed);
}

SolutionSample sample_solution(const Solution& solution, const BSDEProblem& problem, const PathSet& paths) {
  const TimeGrid& grid = solution.grid();
  const int steps = grid.steps();
  const int d = solution.dim();
  const int m = solution.n_marks();
  const int n = paths.n_paths;
  if (paths.steps != steps) throw InvalidArgument("sample_solution: path set does not match the grid");
  std::vector<double> y(static_cast<std::size_t>(n) * (steps + 1));
  std::vector<double> z(static_cast<std::size_t>(n) * steps * d);
  std::vector<double> v(static_cast<std::size_t>(n) * steps * m);
  std::vector<double> xi(n), f0(static_cast<std::size_t>(n) * steps);
  for (int p = 0; p < n; ++p) {
    for (int k = 0; k <= steps; ++k) {
      const std::size_t s = paths.slot(p, k);
      y[static_cast<std::size_t>(p) * (steps + 1) + k] = solution.y(k, s);
      if (k < steps) {
        std::copy_n(solution.z(k, s).data(), d, z.data() + (static_cast<std::size_t>(p) * steps + k) * d);
        std::copy_n(solution.v(k, s).data(), m, v.data() + (static_cast<std::size_t>(p) * steps + k) * m);
        f0[static_cast<std::size_t>(p) * steps + k] = problem.driver_at_zero(solution.state(k, s));
      } else {
        xi[p] = problem.terminal(solution.state(k, s));
      }
    }
  }
  return SolutionSample{ProcessSample(grid, n, steps + 1, 1, std::move(y), paths.weights),
                        ProcessSample(grid, n, steps, d, std::move(z), paths.weights),
                        RandomField(grid, solution.marks(), n, std::move(v), paths.weights),
                        std::move(xi),
                        std::move(f0),
                        paths.estimator,
                        n,
                        paths.seed};
}

TripleDistance solution_distance(const Solution& a, const Solution& b, const PathSet& paths, double q) {
  return solution_distance(a, b, paths, q, 0, a.grid().steps());
}

TripleDistance solution_distance(const Solution& a, const Solution& b, const PathSet& paths, double q, int k0,
                                 int k1) {
  if (k0 < 0 || k1 > a.grid().steps() || k0 >= k1) throw InvalidArgument("solution_distance: bad layer range");
  const int steps = k1 - k0;
  const int d = a.dim();
  const int m = a.n_marks();
  const int n = paths.n_paths;
  std::vector<double> dy(static_cast<std::size_t>(n) * (steps + 1));
  std::vector<double> dz(static_cast<std::size_t>(n) * steps * d);
  std::vector<double> dv(static_cast<std::size_t>(n) * steps * m);
  for (int p = 0; p < n; ++p) {
    for (int j = 0; j <= steps; ++j) {
      const int k = k0 + j;
      const std::size_t s = paths.slot(p, k);
      dy[static_cast<std::size_t>(p) * (steps + 1) + j] = a.y(k, s) - b.y(k, s);
      if (j == steps) continue;
      const auto za = a.z(k, s), zb = b.z(k, s);
      for (int l = 0; l < d; ++l) dz[(static_cast<std::size_t>(p) * steps + j) * d + l] = za[l] - zb[l];
      const auto va = a.v(k, s), vb = b.v(k, s);
      for (int i = 0; i < m; ++i) dv[(static_cast<std::size_t>(p) * steps + j) * m + i] = va[i] - vb[i];
    }
  }
  const TimeGrid grid(a.grid().node(k1) - a.grid().node(k0), steps);
  TripleDistance out;
  out.y = sp_norm(ProcessSample(grid, n, steps + 1, 1, std::move(dy), paths.weights), q);
  out.z = mp_norm(ProcessSample(grid, n, steps, d, std::move(dz), paths.weights), q);
  out.v = lp_field_norm(RandomField(grid, a.marks(), n, std::move(dv), paths.weights), q);
  return out;
}

ResidualReport tree_martingale_residual(const Solution& solution, const BSDEProblem& problem) {
  if (solution.representation() != Representation::tree) {
    throw InvalidArgument("martingale residual: tree solution required");
  }
  const ScenarioTree& tree = *solution.tree();
  const int d = tree.dim();
  const int m = tree.n_marks();
  const double dt = tree.grid().dt();
  ResidualReport report;
  for (int k = 0; k < tree.depth(); ++k) {
    for (std::size_t node = 0; node < tree.layer_size(k); ++node) {
      const double y = solution.y(k, node);
      const auto z = solution.z(k, node);
      const auto v = solution.v(k, node);
      const double drift = problem.generator(tree.state(k, node), y, z, v) * dt;
      double cond_mean = 0.0;
      std::vector<double> ortho(d + m, 0.0);
      for (int b = 0; b < tree.branching(); ++b) {
        const double pb = tree.branch_probability(b);
        const double next = solution.y(k + 1, tree.child(k, node, b));
        const int j = tree.jump_of(b);
        double mart = 0.0;
        for (int l = 0; l < d; ++l) mart += z[l] * tree.sign(b, l) * tree.sqrt_dt();
        for (int i = 0; i < m; ++i) mart += v[i] * ((j == i + 1 ? 1.0 : 0.0) - tree.jump_probability(i + 1));
        const double r = next - y + drift - mart;
        report.max_abs = std::max(report.max_abs, std::abs(r));
        cond_mean += pb * r;
        for (int l = 0; l < d; ++l) ortho[l] += pb * r * tree.sign(b, l);
        for (int i = 0; i < m; ++i) ortho[d + i] += pb * r * (j == i + 1 ? 1.0 : 0.0);
      }
      report.max_conditional_mean = std::max(report.max_conditional_mean, std::abs(cond_mean));
      for (double o : ortho) report.max_orthogonality = std::max(report.max_orthogonality, std::abs(o));
    }
  }
  return report;
}

}  // namespace bsdej
