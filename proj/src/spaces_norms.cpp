#include "bsdej/spaces_norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bsdej/errors.hpp"

namespace bsdej {

ProcessSample::ProcessSample(TimeGrid grid, int n_paths, int n_times, int dim, std::vector<double> values,
                             std::vector<double> weights)
    : grid_(grid), n_paths_(n_paths), n_times_(n_times), dim_(dim), values_(std::move(values)), weights_(std::move(weights)) {
  if (n_paths_ < 1 || dim_ < 1) throw InvalidArgument("process sample: n_paths and dim must be >= 1");
  if (n_times_ != grid_.steps() && n_times_ != grid_.steps() + 1) {
    throw InvalidArgument("process sample: n_times must be steps or steps + 1");
  }
  if (values_.size() != static_cast<std::size_t>(n_paths_) * n_times_ * dim_) {
    throw InvalidArgument("process sample: values have wrong shape");
  }
  if (!weights_.empty() && static_cast<int>(weights_.size()) != n_paths_) {
    throw InvalidArgument("process sample: weights have wrong length");
  }
  for (double x : values_) {
    if (!std::isfinite(x)) throw InvalidArgument("process sample: non-finite value");
  }
}

ProcessSample ProcessSample::constant(TimeGrid grid, int n_paths, double c) {
  const int n_times = grid.steps() + 1;
  return ProcessSample(grid, n_paths, n_times, 1, std::vector<double>(static_cast<std::size_t>(n_paths) * n_times, c));
}

std::span<const double> ProcessSample::at(int path, int time) const {
  return std::span<const double>(values_).subspan((static_cast<std::size_t>(path) * n_times_ + time) * dim_, dim_);
}

double ProcessSample::magnitude(int path, int time) const {
  if (dim_ == 1) return std::abs((*this)(path, time));
  double s = 0.0;
  for (double x : at(path, time)) s += x * x;
  return std::sqrt(s);
}

ProcessSample ProcessSample::scaled(double c) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= c;
  return ProcessSample(grid_, n_paths_, n_times_, dim_, std::move(v), weights_);
}

ProcessSample ProcessSample::minus(const ProcessSample& other) const {
  if (other.n_paths_ != n_paths_ || other.n_times_ != n_times_ || other.dim_ != dim_) {
    throw InvalidArgument("process sample: shape mismatch in difference");
  }
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= other.values_[i];
  return ProcessSample(grid_, n_paths_, n_times_, dim_, std::move(v), weights_);
}

namespace {

template <typename PerPath>
double expectation(const ProcessSample& s, PerPath&& per_path) {
  if (s.weights().empty()) {
    double total = 0.0;
    for (int k = 0; k < s.n_paths(); ++k) total += per_path(k);
    return total / s.n_paths();
  }
  double total = 0.0;
  for (int k = 0; k < s.n_paths(); ++k) total += s.weight(k) * per_path(k);
  return total;
}

void require_node_valued(const ProcessSample& y, const char* what) {
  if (y.n_times() != y.grid().steps() + 1) {
    throw InvalidArgument(std::string(what) + ": sample must be node-valued (steps + 1 times)");
  }
}

}  // namespace

std::string StoppingRule::label() const {
  std::ostringstream out;
  if (kind == Kind::deterministic) {
    out << "t_" << node;
  } else {
    out << "hit(|Y|>=" << level << ")";
  }
  return out.str();
}

int StoppingRule::apply(const ProcessSample& y, int path) const {
  const int last = y.n_times() - 1;
  if (kind == Kind::deterministic) return std::clamp(node, 0, last);
  for (int j = 0; j <= last; ++j) {
    if (y.magnitude(path, j) >= level) return j;
  }
  return last;
}

StoppingFamily StoppingFamily::deterministic_times(int steps) {
  StoppingFamily family;
  for (int j = 0; j <= steps; ++j) family.add(StoppingRule{StoppingRule::Kind::deterministic, j, 0.0});
  return family;
}

double weighted_abs_quantile(const ProcessSample& y, int node, double q) {
  std::vector<std::pair<double, double>> pts(y.n_paths());
  for (int k = 0; k < y.n_paths(); ++k) pts[k] = {y.magnitude(k, node), y.weight(k)};
  std::sort(pts.begin(), pts.end());
  double acc = 0.0;
  for (const auto& [value, w] : pts) {
    acc += w;
    if (acc >= q) return value;
  }
  return pts.back().first;
}

StoppingFamily StoppingFamily::default_for(const ProcessSample& y) {
  require_node_valued(y, "stopping family");
  StoppingFamily family = deterministic_times(y.grid().steps());
  for (double q : {0.5, 0.9, 0.99}) {
    const double level = weighted_abs_quantile(y, y.grid().steps(), q);
    if (level > 0.0) family.add(StoppingRule{StoppingRule::Kind::hitting, 0, level});
  }
  return family;
}

double sp_norm(const ProcessSample& y, double p) {
  if (!(p > 0.0)) throw InvalidArgument("S^p norm: p must be positive");
  const double m = expectation(y, [&](int k) {
    double sup = 0.0;
    for (int j = 0; j < y.n_times(); ++j) sup = std::max(sup, y.magnitude(k, j));
    return std::pow(sup, p);
  });
  return std::pow(m, 1.0 / p);
}

double mp_norm(const ProcessSample& z, double p) {
  if (!(p > 0.0)) throw InvalidArgument("M^p norm: p must be positive");
  const double dt = z.grid().dt();
  const int steps = z.grid().steps();
  const double m = expectation(z, [&](int k) {
    double integral = 0.0;
    for (int j = 0; j < steps; ++j) {
      const double a = z.magnitude(k, j);
      integral += a * a * dt;
    }
    return std::pow(integral, p / 2.0);
  });
  return std::pow(m, 1.0 / p);
}

ClassDEstimate class_d_norm(const ProcessSample& y, const StoppingFamily& family) {
  if (family.empty()) throw InvalidArgument("class D norm: stopping family is empty");
  require_node_valued(y, "class D norm");
  ClassDEstimate best{-1.0, {}, true, 0.0};
  const StoppingRule* winner = nullptr;
  for (const auto& rule : family.rules()) {
    const double v = expectation(y, [&](int k) { return y.magnitude(k, rule.apply(y, k)); });
    if (v > best.value) {
      best = ClassDEstimate{v, rule.label(), true, 0.0};
      winner = &rule;
    }
  }
  const int n = y.n_paths();
  if (y.weights().empty() && n > 1) {
    double ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const double d = y.magnitude(k, winner->apply(y, k)) - best.value;
      ss += d * d;
    }
    best.se = std::sqrt(ss / (n - 1) / n);
  }
  return best;
}

std::vector<std::pair<double, double>> uniform_integrability_profile(const ProcessSample& y,
                                                                     const StoppingFamily& family,
                                                                     std::span<const double> levels) {
  if (family.empty()) throw InvalidArgument("UI profile: stopping family is empty");
  require_node_valued(y, "UI profile");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw InvalidArgument("UI profile: levels must be increasing");
  }
  // Stopping nodes do not depend on K; compute them once.
  std::vector<std::vector<double>> stopped;
  stopped.reserve(family.rules().size());
  for (const auto& rule : family.rules()) {
    std::vector<double> v(y.n_paths());
    for (int k = 0; k < y.n_paths(); ++k) v[k] = y.magnitude(k, rule.apply(y, k));
    stopped.push_back(std::move(v));
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(levels.size());
  for (double level : levels) {
    double worst = 0.0;
    for (const auto& v : stopped) {
      const double e = expectation(y, [&](int k) { return v[k] > level ? v[k] : 0.0; });
      worst = std::max(worst, e);
    }
    out.emplace_back(level, worst);
  }
  return out;
}

}  // namespace bsdej
