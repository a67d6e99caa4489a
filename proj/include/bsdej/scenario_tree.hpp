#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bsdej/randomness.hpp"
#include "bsdej/state.hpp"

namespace bsdej {

struct TreeOptions {
  /// Merge nodes with equal Markov state (Brownian level, jump counts).
  /// Off: every node is a distinct history and the leaf count is (2^d (1+m))^N.
  bool recombine = false;
  std::size_t node_cap = 10'000'000;
};

/// Exact finite model of the filtration: per step 2^d equiprobable Brownian
/// sign branches (increment +-sqrt(dt) per dimension) times 1 + m jump
/// branches (no jump with probability exp(-Lambda dt), one mark-i jump with
/// probability lambda_i / Lambda * (1 - exp(-Lambda dt))).
///
/// Branch b encodes Brownian sign pattern s = b / (1 + m) (bit l set means
/// dimension l moves up) and jump outcome j = b % (1 + m) (0 = none, i + 1 =
/// mark i).
class ScenarioTree {
 public:
  ScenarioTree(const TimeGrid& grid, const MarkSpace& marks, int dim, TreeOptions options = {});

  const TimeGrid& grid() const noexcept { return grid_; }
  const MarkSpace& marks() const noexcept { return marks_; }
  int dim() const noexcept { return dim_; }
  int n_marks() const noexcept { return marks_.size(); }
  bool recombining() const noexcept { return recombine_; }
  int depth() const noexcept { return grid_.steps(); }

  int branching() const noexcept { return brownian_branches_ * (1 + n_marks()); }
  int brownian_branches() const noexcept { return brownian_branches_; }
  int sign(int branch, int l) const noexcept { return ((branch / (1 + n_marks())) >> l) & 1 ? 1 : -1; }
  int jump_of(int branch) const noexcept { return branch % (1 + n_marks()); }
  int branch_index(int sign_pattern, int jump) const noexcept { return sign_pattern * (1 + n_marks()) + jump; }
  /// p_none for j = 0, p_i for j = i + 1.
  double jump_probability(int j) const { return jump_probs_.at(j); }
  double branch_probability(int branch) const;
  double sqrt_dt() const noexcept { return sqrt_dt_; }

  std::size_t layer_size(int k) const { return layers_.at(k).probability.size(); }
  std::size_t total_nodes() const noexcept;
  double probability(int k, std::size_t node) const { return layers_[k].probability[node]; }
  std::span<const double> layer_probabilities(int k) const { return layers_.at(k).probability; }
  std::size_t child(int k, std::size_t node, int branch) const {
    return layers_[k].children[node * branching() + branch];
  }
  StateView state(int k, std::size_t node) const;
  /// Branch sequence from the root; only available without recombination.
  std::vector<int> branch_history(int k, std::size_t node) const;

 private:
  struct Layer {
    std::vector<double> probability;
    std::vector<double> brownian;      // (node, dim)
    std::vector<int> jump_counts;      // (node, mark)
    std::vector<std::uint32_t> children;  // (node, branch), empty on the last layer
  };

  void build_full();
  void build_recombining();

  TimeGrid grid_;
  MarkSpace marks_;
  int dim_;
  bool recombine_;
  int brownian_branches_;
  double sqrt_dt_;
  std::vector<double> jump_probs_;
  std::vector<Layer> layers_;
};

/// Exact one-step conditional moments of a next-layer quantity X at a node:
/// mean = E[X | node], z_l = E[X dB_l | node] / dt and
/// v_i = E[X | node, mark-i jump] - E[X | node, no jump].
/// Brownian branches are averaged by pairwise summation and the jump mixture
/// is formed as E_0 + sum_i p_i (E_i - E_0), so a constant X yields mean == X,
/// z == 0 and v == 0 exactly.
void project_node(const ScenarioTree& tree, int k, std::size_t node, std::span<const double> next_values,
                  double& mean, std::span<double> z, std::span<double> v);

ScenarioTree build_scenario_tree(const TimeGrid& grid, const MarkSpace& marks, int dim, TreeOptions options = {});

/// Node count a tree would have, computed without building it.
double scenario_tree_node_count(const TimeGrid& grid, const MarkSpace& marks, int dim, bool recombine);

}  // namespace bsdej
