#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsdej/randomness.hpp"

namespace bsdej {

/// Predictable integrand V_s(e) sampled per (path, step, mark). The value at
/// step j is the left-endpoint value used for every jump in (t_j, t_{j+1}].
/// Optional path weights (empty means uniform) let tree-derived fields reuse
/// the same norms with exact probabilities.
class RandomField {
 public:
  RandomField(TimeGrid grid, MarkSpace marks, int n_paths, std::vector<double> values,
              std::vector<double> weights = {});

  static RandomField constant(TimeGrid grid, MarkSpace marks, int n_paths, double c);
  /// V(e_i) = g(i), identical across paths and steps.
  static RandomField per_mark(TimeGrid grid, MarkSpace marks, int n_paths, std::span<const double> g);

  const TimeGrid& grid() const noexcept { return grid_; }
  const MarkSpace& marks() const noexcept { return marks_; }
  int n_paths() const noexcept { return n_paths_; }
  int n_marks() const noexcept { return marks_.size(); }
  double operator()(int path, int step, int mark) const {
    return values_[(static_cast<std::size_t>(path) * grid_.steps() + step) * n_marks() + mark];
  }
  std::span<const double> section(int path, int step) const;
  std::span<const double> values() const noexcept { return values_; }
  double weight(int path) const { return weights_.empty() ? 1.0 / n_paths_ : weights_[path]; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  TimeGrid grid_;
  MarkSpace marks_;
  int n_paths_;
  std::vector<double> values_;
  std::vector<double> weights_;
};

/// Value of M just before and just after one jump event.
struct JumpRecord {
  double time = 0.0;
  int step = 0;
  int mark = 0;
  double before = 0.0;
  double after = 0.0;
  double qv_after = 0.0;
};

/// Running compensated Poisson integral per path, recorded at grid nodes and
/// on both sides of every jump. With finitely many marks the integral is a
/// finite sum pathwise, so no L^p_loc limiting construction is involved.
struct IntegralResult {
  TimeGrid grid;
  int n_paths = 0;
  std::vector<double> node_values;  // (path, node)
  std::vector<double> node_qv;      // (path, node)
  std::vector<std::vector<JumpRecord>> jumps;

  double value(int path, int node) const { return node_values[static_cast<std::size_t>(path) * (grid.steps() + 1) + node]; }
  double qv(int path, int node) const { return node_qv[static_cast<std::size_t>(path) * (grid.steps() + 1) + node]; }
  double terminal(int path) const { return value(path, grid.steps()); }
  std::vector<double> terminal_values() const;
  std::vector<double> terminal_qv() const;
};

/// Running sum_{k<j} Z_k . dB_k, shaped (path, node). z is (path, step, dim).
std::vector<double> brownian_integral(std::span<const double> z, const PathBatch& batch);

IntegralResult poisson_integral_compensated(const RandomField& v, const PathBatch& batch, int threads = 1);

/// [M, M] at every node: sum of |V|^2 over realized jumps, no compensator.
std::vector<double> quadratic_variation(const RandomField& v, const PathBatch& batch);

struct JumpIdentityReport {
  bool pass = true;
  int failing_paths = 0;
  struct Violation {
    int path = -1;
    int jump = -1;
    double time = 0.0;
    double expected = 0.0;
    double observed = 0.0;
  };
  std::optional<Violation> first_violation;
  std::vector<bool> per_path;
};

/// Checks Delta M_tau = V_{step(tau)}(e_i) at every jump. The comparison
/// allows a few ulps of the operands, the rounding of one addition.
JumpIdentityReport jump_identity_check(const RandomField& v, const IntegralResult& result, const PathBatch& batch);

/// (E sum_j sum_i |V_j(e_i)|^p lambda_i dt)^{1/p}.
double lp_field_norm(const RandomField& v, double p);
/// (sum_i |v_i|^p lambda_i)^{1/p}, the norm of one section V_s(.).
double sectional_norm(std::span<const double> v, const MarkSpace& marks, double p);

}  // namespace bsdej
