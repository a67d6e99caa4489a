#include "bsdej/scenario_tree.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "bsdej/errors.hpp"

namespace bsdej {

namespace {

constexpr int kMaxTreeDim = 8;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

double scenario_tree_node_count(const TimeGrid& grid, const MarkSpace& marks, int dim, bool recombine) {
  const int steps = grid.steps();
  const int m = marks.size();
  if (!recombine) {
    return std::pow(std::pow(2.0, dim) * (1 + m), steps);
  }
  double total = 0.0;
  for (int k = 0; k <= steps; ++k) total += std::pow(k + 1.0, dim) * binomial(k + m, m);
  return total;
}

ScenarioTree::ScenarioTree(const TimeGrid& grid, const MarkSpace& marks, int dim, TreeOptions options)
    : grid_(grid),
      marks_(marks),
      dim_(dim),
      recombine_(options.recombine),
      brownian_branches_(0),
      sqrt_dt_(std::sqrt(grid.dt())) {
  if (dim < 1 || dim > kMaxTreeDim) throw InvalidArgument("scenario tree: dimension must be in [1, 8]");
  brownian_branches_ = 1 << dim;
  const double count = scenario_tree_node_count(grid, marks, dim, recombine_);
  if (!(count <= static_cast<double>(options.node_cap))) {
    std::ostringstream msg;
    msg << "scenario tree: " << (recombine_ ? "node" : "leaf") << " count " << count << " exceeds node cap "
        << options.node_cap;
    throw ResourceLimit(msg.str());
  }
  const double total_rate = marks_.total_intensity();
  const double p_none = std::exp(-total_rate * grid_.dt());
  jump_probs_.resize(1 + marks_.size());
  jump_probs_[0] = p_none;
  for (int i = 0; i < marks_.size(); ++i) {
    jump_probs_[i + 1] = marks_.intensity(i) / total_rate * -std::expm1(-total_rate * grid_.dt());
  }
  layers_.resize(grid_.steps() + 1);
  Layer& root = layers_[0];
  root.probability = {1.0};
  root.brownian.assign(dim_, 0.0);
  root.jump_counts.assign(marks_.size(), 0);
  if (recombine_) {
    build_recombining();
  } else {
    build_full();
  }
}

double ScenarioTree::branch_probability(int branch) const {
  return jump_probs_[jump_of(branch)] / brownian_branches_;
}

std::size_t ScenarioTree::total_nodes() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.probability.size();
  return n;
}

StateView ScenarioTree::state(int k, std::size_t node) const {
  const Layer& layer = layers_.at(k);
  return StateView{grid_.node(k), std::span<const double>(layer.brownian).subspan(node * dim_, dim_),
                   std::span<const int>(layer.jump_counts).subspan(node * marks_.size(), marks_.size())};
}

std::vector<int> ScenarioTree::branch_history(int k, std::size_t node) const {
  if (recombine_) throw InvalidArgument("scenario tree: recombined nodes carry no unique history");
  std::vector<int> history(k);
  const auto b = static_cast<std::size_t>(branching());
  for (int i = k - 1; i >= 0; --i) {
    history[i] = static_cast<int>(node % b);
    node /= b;
  }
  return history;
}

void ScenarioTree::build_full() {
  const int branches = branching();
  const int m = marks_.size();
  for (int k = 0; k < grid_.steps(); ++k) {
    Layer& parent = layers_[k];
    Layer& next = layers_[k + 1];
    const std::size_t n = parent.probability.size();
    const std::size_t n_next = n * branches;
    parent.children.resize(n_next);
    next.probability.resize(n_next);
    next.brownian.resize(n_next * dim_);
    next.jump_counts.resize(n_next * m);
    for (std::size_t node = 0; node < n; ++node) {
      for (int b = 0; b < branches; ++b) {
        const std::size_t c = node * branches + b;
        parent.children[c] = static_cast<std::uint32_t>(c);
        next.probability[c] = parent.probability[node] * branch_probability(b);
        for (int l = 0; l < dim_; ++l) {
          // Brownian level kept as an integer walk so equal states get equal values
          const double level = std::round(parent.brownian[node * dim_ + l] / sqrt_dt_) + sign(b, l);
          next.brownian[c * dim_ + l] = sqrt_dt_ * level;
        }
        for (int i = 0; i < m; ++i) next.jump_counts[c * m + i] = parent.jump_counts[node * m + i];
        const int j = jump_of(b);
        if (j > 0) ++next.jump_counts[c * m + j - 1];
      }
    }
  }
}

void ScenarioTree::build_recombining() {
  const int branches = branching();
  const int m = marks_.size();
  const int steps = grid_.steps();
  const double radix = steps + 1.0;
  if ((dim_ + m) * std::log2(radix) >= 63.0) {
    throw ResourceLimit("scenario tree: state key does not fit in 64 bits");
  }
  // Integer levels per layer: ups per dimension and jumps per mark.
  std::vector<int> levels(dim_ + m, 0);
  std::vector<std::vector<int>> layer_levels(1, std::vector<int>(dim_ + m, 0));
  for (int k = 0; k < steps; ++k) {
    Layer& parent = layers_[k];
    Layer& next = layers_[k + 1];
    const std::size_t n = parent.probability.size();
    parent.children.resize(n * branches);
    std::unordered_map<std::uint64_t, std::uint32_t> index;
    index.reserve(n * 4);
    std::vector<std::vector<int>> next_levels;
    for (std::size_t node = 0; node < n; ++node) {
      const auto& base = layer_levels[node];
      for (int b = 0; b < branches; ++b) {
        for (int l = 0; l < dim_; ++l) levels[l] = base[l] + (sign(b, l) > 0 ? 1 : 0);
        for (int i = 0; i < m; ++i) levels[dim_ + i] = base[dim_ + i];
        const int j = jump_of(b);
        if (j > 0) ++levels[dim_ + j - 1];
        std::uint64_t key = 0;
        for (int v : levels) key = key * static_cast<std::uint64_t>(steps + 1) + static_cast<std::uint64_t>(v);
        auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(next_levels.size()));
        if (inserted) {
          next_levels.push_back(levels);
          next.probability.push_back(0.0);
        }
        const std::uint32_t c = it->second;
        parent.children[node * branches + b] = c;
        next.probability[c] += parent.probability[node] * branch_probability(b);
      }
    }
    const std::size_t n_next = next_levels.size();
    next.brownian.resize(n_next * dim_);
    next.jump_counts.resize(n_next * m);
    for (std::size_t c = 0; c < n_next; ++c) {
      for (int l = 0; l < dim_; ++l) next.brownian[c * dim_ + l] = sqrt_dt_ * (2.0 * next_levels[c][l] - (k + 1));
      for (int i = 0; i < m; ++i) next.jump_counts[c * m + i] = next_levels[c][dim_ + i];
    }
    layer_levels = std::move(next_levels);
  }
}

namespace {

// In-place pairwise reduction of a power-of-two sized buffer.
double pairwise_sum(double* buf, int n) {
  for (int width = n; width > 1; width /= 2) {
    for (int i = 0; i < width / 2; ++i) buf[i] = buf[2 * i] + buf[2 * i + 1];
  }
  return buf[0];
}

}  // namespace

void project_node(const ScenarioTree& tree, int k, std::size_t node, std::span<const double> next_values,
                  double& mean, std::span<double> z, std::span<double> v) {
  const int d = tree.dim();
  const int m = tree.n_marks();
  const int nb = tree.brownian_branches();
  const double inv_nb = 1.0 / nb;
  const double inv_scale = inv_nb / tree.sqrt_dt();
  std::array<double, 1 << kMaxTreeDim> buf{};
  std::array<double, 1 + 32> cond_mean{};
  std::array<double, (1 + 32) * kMaxTreeDim> cond_z{};
  if (m > 32) throw InvalidArgument("project_node: at most 32 marks supported");
  for (int j = 0; j <= m; ++j) {
    for (int s = 0; s < nb; ++s) buf[s] = next_values[tree.child(k, node, tree.branch_index(s, j))];
    cond_mean[j] = pairwise_sum(buf.data(), nb) * inv_nb;
    for (int l = 0; l < d; ++l) {
      for (int s = 0; s < nb; ++s) {
        const double x = next_values[tree.child(k, node, tree.branch_index(s, j))];
        buf[s] = ((s >> l) & 1) ? x : -x;
      }
      cond_z[j * d + l] = pairwise_sum(buf.data(), nb) * inv_scale;
    }
  }
  double mixture = 0.0;
  for (int i = 1; i <= m; ++i) {
    v[i - 1] = cond_mean[i] - cond_mean[0];
    mixture += tree.jump_probability(i) * v[i - 1];
  }
  mean = cond_mean[0] + mixture;
  for (int l = 0; l < d; ++l) {
    double zmix = 0.0;
    for (int i = 1; i <= m; ++i) zmix += tree.jump_probability(i) * (cond_z[i * d + l] - cond_z[l]);
    z[l] = cond_z[l] + zmix;
  }
}

ScenarioTree build_scenario_tree(const TimeGrid& grid, const MarkSpace& marks, int dim, TreeOptions options) {
  return ScenarioTree(grid, marks, dim, options);
}

}  // namespace bsdej
