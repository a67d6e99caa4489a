#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsdej/randomness.hpp"

namespace bsdej {

/// Sampled adapted process: values per (path, time index, component).
/// Node-valued processes (Y) have steps + 1 time indices; step-valued
/// processes (Z) have steps. Weights sum to one; empty means uniform.
class ProcessSample {
 public:
  ProcessSample(TimeGrid grid, int n_paths, int n_times, int dim, std::vector<double> values,
                std::vector<double> weights = {});

  /// Scalar process constant in time and across paths.
  static ProcessSample constant(TimeGrid grid, int n_paths, double c);

  const TimeGrid& grid() const noexcept { return grid_; }
  int n_paths() const noexcept { return n_paths_; }
  int n_times() const noexcept { return n_times_; }
  int dim() const noexcept { return dim_; }
  double operator()(int path, int time, int l = 0) const {
    return values_[(static_cast<std::size_t>(path) * n_times_ + time) * dim_ + l];
  }
  std::span<const double> at(int path, int time) const;
  /// Euclidean norm of the value at (path, time).
  double magnitude(int path, int time) const;
  double weight(int path) const { return weights_.empty() ? 1.0 / n_paths_ : weights_[path]; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> values() const noexcept { return values_; }

  ProcessSample scaled(double c) const;
  /// this - other, keeping this sample's weights.
  ProcessSample minus(const ProcessSample& other) const;

 private:
  TimeGrid grid_;
  int n_paths_;
  int n_times_;
  int dim_;
  std::vector<double> values_;
  std::vector<double> weights_;
};

/// A non-anticipative stopping rule on node-valued samples.
struct StoppingRule {
  enum class Kind { deterministic, hitting };
  Kind kind = Kind::deterministic;
  int node = 0;        // deterministic: the stopping node
  double level = 0.0;  // hitting: first node with |Y| >= level, else the last node
  std::string label() const;
  int apply(const ProcessSample& y, int path) const;
};

class StoppingFamily {
 public:
  StoppingFamily() = default;
  explicit StoppingFamily(std::vector<StoppingRule> rules) : rules_(std::move(rules)) {}

  void add(StoppingRule rule) { rules_.push_back(rule); }
  std::span<const StoppingRule> rules() const noexcept { return rules_; }
  bool empty() const noexcept { return rules_.empty(); }

  static StoppingFamily deterministic_times(int steps);
  /// All grid times plus first hitting of |Y| at the weighted 50/90/99%
  /// quantiles of terminal |Y|.
  static StoppingFamily default_for(const ProcessSample& y);

 private:
  std::vector<StoppingRule> rules_;
};

double sp_norm(const ProcessSample& y, double p);
double mp_norm(const ProcessSample& z, double p);

struct ClassDEstimate {
  double value = 0.0;
  std::string best_rule;
  /// Always true: the maximum over a finite family bounds sup over all stopping times from below.
  bool lower_bound = true;
  /// Standard error of the winning rule's mean on uniformly weighted samples; 0 for exact weights.
  double se = 0.0;
};

ClassDEstimate class_d_norm(const ProcessSample& y, const StoppingFamily& family);

/// For each level K: max over rules of E[|Y_tau| 1{|Y_tau| > K}].
std::vector<std::pair<double, double>> uniform_integrability_profile(const ProcessSample& y,
                                                                     const StoppingFamily& family,
                                                                     std::span<const double> levels);

/// Weighted p-quantile of |Y| at one node.
double weighted_abs_quantile(const ProcessSample& y, int node, double q);

struct NormReport {
  std::string norm;
  double p = 0.0;
  double value = 0.0;
  std::string estimator;  // "mc" | "tree" | "tree-sampled"
  int n_paths = 0;
  std::uint64_t seed = 0;
};

}  // namespace bsdej
