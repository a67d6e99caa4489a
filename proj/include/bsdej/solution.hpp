#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bsdej/generators.hpp"
#include "bsdej/randomness.hpp"
#include "bsdej/scenario_tree.hpp"
#include "bsdej/spaces_norms.hpp"
#include "bsdej/stochastic_integrals.hpp"

namespace bsdej {

enum class Representation { tree, paths };

const char* to_string(Representation r) noexcept;

/// Adapted triple (Y, Z, V) on the nodes of a scenario tree or on simulated
/// paths. Y lives on nodes 0..N; Z and V on steps 0..N-1 (left endpoints).
/// Slots at layer k are tree nodes of layer k, or path indices.
class Solution {
 public:
  static Solution on_tree(std::shared_ptr<const ScenarioTree> tree, std::string fingerprint);
  static Solution on_paths(std::shared_ptr<const PathBatch> batch, std::shared_ptr<const PathStates> states,
                           std::string fingerprint);

  Representation representation() const noexcept { return representation_; }
  const std::string& fingerprint() const noexcept { return fingerprint_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  int n_marks() const noexcept { return n_marks_; }
  const MarkSpace& marks() const noexcept { return marks_; }
  const std::shared_ptr<const ScenarioTree>& tree() const noexcept { return tree_; }
  const std::shared_ptr<const PathBatch>& batch() const noexcept { return batch_; }
  const std::shared_ptr<const PathStates>& states() const noexcept { return states_; }

  std::size_t slots(int k) const;
  StateView state(int k, std::size_t slot) const;

  double& y(int k, std::size_t slot) { return y_[k][slot]; }
  double y(int k, std::size_t slot) const { return y_[k][slot]; }
  std::span<double> z(int k, std::size_t slot) { return std::span<double>(z_[k]).subspan(slot * dim_, dim_); }
  std::span<const double> z(int k, std::size_t slot) const {
    return std::span<const double>(z_[k]).subspan(slot * dim_, dim_);
  }
  std::span<double> v(int k, std::size_t slot) { return std::span<double>(v_[k]).subspan(slot * n_marks_, n_marks_); }
  std::span<const double> v(int k, std::size_t slot) const {
    return std::span<const double>(v_[k]).subspan(slot * n_marks_, n_marks_);
  }
  std::span<const double> y_layer(int k) const { return y_[k]; }
  std::span<double> y_layer(int k) { return y_[k]; }

  /// Fills (Y, Z, V) with constants on layers [k0, k1) and Y on k1 if include_last.
  void fill(int k0, int k1, double y, double z, double v, bool include_last);
  /// Copies (Y, Z, V) on layers [k0, k1] (Z, V up to k1 - 1) from another solution of the same shape.
  void copy_range(const Solution& other, int k0, int k1);

  double y0() const;
  double y0_se() const noexcept { return y0_se_; }
  void set_y0_se(double se) noexcept { y0_se_ = se; }

  bool bit_equal(const Solution& other) const;

 private:
  Solution(Representation r, TimeGrid grid, MarkSpace marks, int dim, std::string fingerprint);
  void allocate();

  Representation representation_;
  TimeGrid grid_;
  MarkSpace marks_;
  int dim_;
  int n_marks_;
  std::string fingerprint_;
  std::shared_ptr<const ScenarioTree> tree_;
  std::shared_ptr<const PathBatch> batch_;
  std::shared_ptr<const PathStates> states_;
  std::vector<std::vector<double>> y_, z_, v_;
  double y0_se_ = 0.0;
};

/// A weighted set of paths through a solution's slots, used for norm and
/// estimate evaluation. On trees it is either the full enumeration of leaf
/// histories with exact probabilities or a seeded sample of histories.
struct PathSet {
  int n_paths = 0;
  int steps = 0;
  /// (path, node) slot indices; empty means slot == path (simulated paths).
  std::vector<std::uint32_t> slots;
  std::vector<double> weights;
  std::string estimator;
  std::uint64_t seed = 0;

  std::size_t slot(int path, int k) const {
    return slots.empty() ? static_cast<std::size_t>(path) : slots[static_cast<std::size_t>(path) * (steps + 1) + k];
  }
};

struct PathSetOptions {
  /// Enumerate every tree history when their count is at most this.
  std::size_t enumerate_cap = 1u << 20;
  int n_sample = 10000;
  std::uint64_t seed = 1;
};

PathSet enumerate_tree_paths(const ScenarioTree& tree);
PathSet sample_tree_paths(const ScenarioTree& tree, int n_paths, std::uint64_t seed);
PathSet make_path_set(const Solution& solution, const PathSetOptions& options = {});

/// Solution and data evaluated along a path set.
struct SolutionSample {
  ProcessSample y;
  ProcessSample z;
  RandomField v;
  std::vector<double> xi;  // terminal value per path
  std::vector<double> f0;  // (path, step): f(t_j, state, 0, 0, 0)
  std::string estimator;
  int n_paths = 0;
  std::uint64_t seed = 0;
};

SolutionSample sample_solution(const Solution& solution, const BSDEProblem& problem, const PathSet& paths);

/// Distance components ||dY||_{S^q}, ||dZ||_{M^q}, ||dV||_{L^q} between two
/// solutions on a common path set.
struct TripleDistance {
  double y = 0.0;
  double z = 0.0;
  double v = 0.0;
  double total() const noexcept { return y + z + v; }
};

TripleDistance solution_distance(const Solution& a, const Solution& b, const PathSet& paths, double q);
/// Same on layers [k0, k1] only, as processes on an interval of k1 - k0 steps.
TripleDistance solution_distance(const Solution& a, const Solution& b, const PathSet& paths, double q, int k0,
                                 int k1);

/// Per-node residual of the discrete equation
///   Y_{k+1} - Y_k + f dt - Z . dB - sum_i V_i (1{jump i} - p_i).
/// It vanishes when the next-layer values are affine in the Brownian signs
/// and jump indicators separately; otherwise it is the component orthogonal
/// to dB and the jump indicators (zero conditional mean).
struct ResidualReport {
  double max_abs = 0.0;
  double max_conditional_mean = 0.0;
  double max_orthogonality = 0.0;
};

ResidualReport tree_martingale_residual(const Solution& solution, const BSDEProblem& problem);

}  // namespace bsdej
