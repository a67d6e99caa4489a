#include "bsdej/randomness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bsdej/errors.hpp"
#include "bsdej/parallel.hpp"

namespace bsdej {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps), dt_(0.0) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("time grid: horizon must be positive and finite, got " + std::to_string(horizon));
  }
  if (steps < 1) {
    throw InvalidArgument("time grid: steps must be >= 1, got " + std::to_string(steps));
  }
  dt_ = horizon_ / steps_;
}

double TimeGrid::node(int j) const {
  if (j < 0 || j > steps_) throw InvalidArgument("time grid: node index out of range");
  return j == steps_ ? horizon_ : j * dt_;
}

std::vector<double> TimeGrid::nodes() const {
  std::vector<double> out(steps_ + 1);
  for (int j = 0; j <= steps_; ++j) out[j] = node(j);
  return out;
}

int TimeGrid::step_of(double t) const {
  if (!(t > 0.0) || t > horizon_) throw InvalidArgument("time grid: time outside (0, T]");
  int j = static_cast<int>(std::ceil(t / dt_)) - 1;
  j = std::clamp(j, 0, steps_ - 1);
  // ceil can land one cell off near node boundaries
  while (j > 0 && t <= node(j)) --j;
  while (j < steps_ - 1 && t > node(j + 1)) ++j;
  return j;
}

TimeGrid make_time_grid(double horizon, int steps) { return TimeGrid(horizon, steps); }

MarkSpace::MarkSpace(std::vector<std::vector<double>> marks, std::vector<double> intensities)
    : marks_(std::move(marks)), intensities_(std::move(intensities)), total_(0.0) {
  if (marks_.empty()) throw InvalidArgument("mark space: at least one mark is required");
  if (marks_.size() != intensities_.size()) {
    throw InvalidArgument("mark space: marks and intensities differ in length");
  }
  const std::size_t mdim = marks_.front().size();
  for (std::size_t i = 0; i < marks_.size(); ++i) {
    if (marks_[i].empty() || marks_[i].size() != mdim) {
      throw InvalidArgument("mark space: marks must be non-empty vectors of one common dimension");
    }
    const bool zero = std::all_of(marks_[i].begin(), marks_[i].end(), [](double x) { return x == 0.0; });
    if (zero) throw InvalidArgument("mark space: mark " + std::to_string(i) + " is the zero vector");
    if (!(intensities_[i] > 0.0) || !std::isfinite(intensities_[i])) {
      throw InvalidArgument("mark space: intensity " + std::to_string(i) + " must be positive");
    }
  }
  cumulative_.resize(intensities_.size());
  for (std::size_t i = 0; i < intensities_.size(); ++i) {
    total_ += intensities_[i];
    cumulative_[i] = total_;
  }
}

double MarkSpace::mark_norm(int i) const {
  double s = 0.0;
  for (double x : marks_.at(i)) s += x * x;
  return std::sqrt(s);
}

int MarkSpace::select(double u) const {
  const double target = u * total_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  const auto idx = static_cast<int>(it - cumulative_.begin());
  return std::min(idx, size() - 1);
}

namespace {

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);  // 53 bits
  return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> CounterRng::raw(std::uint32_t a, std::uint32_t b, std::uint32_t block) const noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  std::array<std::uint32_t, 4> c{a, b, block, static_cast<std::uint32_t>(stream_)};
  std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kW0;
    k1 += kW1;
  }
  return c;
}

std::array<double, 2> CounterRng::uniforms(std::uint32_t a, std::uint32_t b, std::uint32_t block) const noexcept {
  const auto r = raw(a, b, block);
  return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

std::array<double, 2> CounterRng::normals(std::uint32_t a, std::uint32_t b, std::uint32_t block) const noexcept {
  const auto u = uniforms(a, b, block);
  const double radius = std::sqrt(-2.0 * std::log(u[0]));
  const double angle = 2.0 * std::numbers::pi * u[1];
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

PathBatch::PathBatch(TimeGrid grid, int dim, int n_paths, std::uint64_t seed, std::vector<double> increments,
                     std::optional<MarkSpace> marks, std::vector<std::vector<JumpEvent>> jumps)
    : grid_(grid),
      dim_(dim),
      n_paths_(n_paths),
      seed_(seed),
      increments_(std::move(increments)),
      marks_(std::move(marks)),
      jumps_(std::move(jumps)) {
  if (n_paths_ < 1) throw InvalidArgument("path batch: n_paths must be >= 1");
  if (dim_ < 0) throw InvalidArgument("path batch: negative dimension");
  const std::size_t expected = static_cast<std::size_t>(n_paths_) * grid_.steps() * dim_;
  if (increments_.size() != expected) throw InvalidArgument("path batch: increment array has wrong shape");
  if (jumps_.empty()) jumps_.resize(n_paths_);
  if (static_cast<int>(jumps_.size()) != n_paths_) throw InvalidArgument("path batch: jump list count mismatch");
  if (!marks_) {
    for (const auto& path : jumps_) {
      if (!path.empty()) throw InvalidArgument("path batch: jump events without a mark space");
    }
  }
  for (const auto& path : jumps_) {
    double prev = 0.0;
    for (const auto& ev : path) {
      if (!(ev.time > prev) || ev.time > grid_.horizon()) {
        throw InvalidArgument("path batch: jump times must be strictly increasing within (0, T]");
      }
      if (ev.mark < 0 || ev.mark >= n_marks()) throw InvalidArgument("path batch: jump mark out of range");
      prev = ev.time;
    }
  }
}

const MarkSpace& PathBatch::marks() const {
  if (!marks_) throw InvalidArgument("path batch: no jump part");
  return *marks_;
}

PathBatch PathBatch::slice(int begin, int end) const {
  if (begin < 0 || end > n_paths_ || begin >= end) throw InvalidArgument("path batch: bad slice range");
  const std::size_t row = static_cast<std::size_t>(grid_.steps()) * dim_;
  std::vector<double> inc(increments_.begin() + begin * row, increments_.begin() + end * row);
  std::vector<std::vector<JumpEvent>> jumps(jumps_.begin() + begin, jumps_.begin() + end);
  return PathBatch(grid_, dim_, end - begin, seed_, std::move(inc), marks_, std::move(jumps));
}

std::span<const double> PathBatch::increment(int path, int step) const {
  const std::size_t off = (static_cast<std::size_t>(path) * grid_.steps() + step) * dim_;
  return std::span<const double>(increments_).subspan(off, dim_);
}

bool PathBatch::operator==(const PathBatch& other) const {
  if (!(grid_ == other.grid_) || dim_ != other.dim_ || n_paths_ != other.n_paths_ || seed_ != other.seed_ ||
      increments_ != other.increments_ || marks_.has_value() != other.marks_.has_value()) {
    return false;
  }
  if (marks_ && !(*marks_ == *other.marks_)) return false;
  for (int k = 0; k < n_paths_; ++k) {
    const auto& a = jumps_[k];
    const auto& b = other.jumps_[k];
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].time != b[i].time || a[i].mark != b[i].mark || a[i].step != b[i].step) return false;
    }
  }
  return true;
}

namespace {

std::vector<double> brownian_increments(const TimeGrid& grid, int dim, int n_paths, std::uint64_t seed,
                                        int threads) {
  const int steps = grid.steps();
  const double scale = std::sqrt(grid.dt());
  std::vector<double> out(static_cast<std::size_t>(n_paths) * steps * dim);
  const CounterRng rng(seed, Stream::brownian);
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      for (int j = 0; j < steps; ++j) {
        double* row = out.data() + (k * steps + j) * dim;
        for (int l = 0; l < dim; l += 2) {
          const auto z = rng.normals(static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j),
                                     static_cast<std::uint32_t>(l / 2));
          row[l] = scale * z[0];
          if (l + 1 < dim) row[l + 1] = scale * z[1];
        }
      }
    }
  });
  return out;
}

std::vector<std::vector<JumpEvent>> poisson_events(const TimeGrid& grid, const MarkSpace& marks, int n_paths,
                                                   std::uint64_t seed, int threads) {
  std::vector<std::vector<JumpEvent>> out(n_paths);
  const CounterRng rng(seed, Stream::jumps);
  const double rate = marks.total_intensity();
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      double t = 0.0;
      for (std::uint32_t i = 0;; ++i) {
        const auto u = rng.uniforms(static_cast<std::uint32_t>(k), i, 0);
        t += -std::log(u[0]) / rate;
        if (t > grid.horizon()) break;
        out[k].push_back(JumpEvent{t, marks.select(u[1]), grid.step_of(t)});
      }
    }
  });
  return out;
}

void require_positive(int dim, int n_paths) {
  if (dim < 1) throw InvalidArgument("simulation: dimension must be >= 1");
  if (n_paths < 1) throw InvalidArgument("simulation: n_paths must be >= 1");
}

}  // namespace

PathBatch simulate_brownian(const TimeGrid& grid, int dim, int n_paths, std::uint64_t seed, int threads) {
  require_positive(dim, n_paths);
  return PathBatch(grid, dim, n_paths, seed, brownian_increments(grid, dim, n_paths, seed, threads), std::nullopt,
                   {});
}

PathBatch simulate_poisson_measure(const TimeGrid& grid, const MarkSpace& marks, int n_paths, std::uint64_t seed,
                                   int threads) {
  require_positive(1, n_paths);
  return PathBatch(grid, 0, n_paths, seed, {}, marks, poisson_events(grid, marks, n_paths, seed, threads));
}

PathBatch simulate_paths(const TimeGrid& grid, int dim, const MarkSpace& marks, int n_paths, std::uint64_t seed,
                         int threads) {
  require_positive(dim, n_paths);
  return PathBatch(grid, dim, n_paths, seed, brownian_increments(grid, dim, n_paths, seed, threads), marks,
                   poisson_events(grid, marks, n_paths, seed, threads));
}

PathStates::PathStates(const PathBatch& batch)
    : grid_(batch.grid()),
      n_paths_(batch.n_paths()),
      steps_(batch.grid().steps()),
      dim_(batch.dim()),
      n_marks_(batch.n_marks()) {
  const std::size_t nodes = steps_ + 1;
  brownian_.assign(static_cast<std::size_t>(n_paths_) * nodes * dim_, 0.0);
  counts_.assign(static_cast<std::size_t>(n_paths_) * nodes * n_marks_, 0);
  step_counts_.assign(static_cast<std::size_t>(n_paths_) * steps_ * n_marks_, 0);
  for (int k = 0; k < n_paths_; ++k) {
    double* w = brownian_.data() + static_cast<std::size_t>(k) * nodes * dim_;
    for (int j = 0; j < steps_; ++j) {
      const auto inc = batch.increment(k, j);
      for (int l = 0; l < dim_; ++l) w[(j + 1) * dim_ + l] = w[j * dim_ + l] + inc[l];
    }
    int* sc = step_counts_.data() + static_cast<std::size_t>(k) * steps_ * n_marks_;
    for (const auto& ev : batch.jumps(k)) ++sc[ev.step * n_marks_ + ev.mark];
    int* c = counts_.data() + static_cast<std::size_t>(k) * nodes * n_marks_;
    for (int j = 0; j < steps_; ++j) {
      for (int i = 0; i < n_marks_; ++i) c[(j + 1) * n_marks_ + i] = c[j * n_marks_ + i] + sc[j * n_marks_ + i];
    }
  }
}

StateView PathStates::at(int path, int node) const {
  const std::size_t nodes = steps_ + 1;
  const std::size_t row = static_cast<std::size_t>(path) * nodes + node;
  return StateView{grid_.node(node),
                   std::span<const double>(brownian_).subspan(row * dim_, dim_),
                   std::span<const int>(counts_).subspan(row * n_marks_, n_marks_)};
}

int PathStates::step_jumps(int path, int step, int mark) const {
  return step_counts_[(static_cast<std::size_t>(path) * steps_ + step) * n_marks_ + mark];
}

}  // namespace bsdej
