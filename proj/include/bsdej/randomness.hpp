#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bsdej/state.hpp"

namespace bsdej {

/// Uniform grid t_j = j * T / N on [0, T]; the last node is T exactly.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return dt_; }
  double node(int j) const;
  std::vector<double> nodes() const;
  /// Index j of the step (t_j, t_{j+1}] containing t, for t in (0, T].
  int step_of(double t) const;

  bool operator==(const TimeGrid& other) const noexcept {
    return horizon_ == other.horizon_ && steps_ == other.steps_;
  }

 private:
  double horizon_;
  int steps_;
  double dt_;
};

TimeGrid make_time_grid(double horizon, int steps);

/// Finite mark set U = {e_1..e_m} with intensities lambda_i > 0.
class MarkSpace {
 public:
  MarkSpace(std::vector<std::vector<double>> marks, std::vector<double> intensities);

  int size() const noexcept { return static_cast<int>(marks_.size()); }
  std::span<const double> mark(int i) const { return marks_.at(i); }
  double mark_norm(int i) const;
  double intensity(int i) const { return intensities_.at(i); }
  std::span<const double> intensities() const noexcept { return intensities_; }
  double total_intensity() const noexcept { return total_; }
  /// Mark index for a uniform draw u in (0,1), choosing e_i with probability lambda_i / Lambda.
  int select(double u) const;

  bool operator==(const MarkSpace& other) const noexcept {
    return marks_ == other.marks_ && intensities_ == other.intensities_;
  }

 private:
  std::vector<std::vector<double>> marks_;
  std::vector<double> intensities_;
  std::vector<double> cumulative_;
  double total_;
};

/// Stream tags separating independent uses of one seed.
enum class Stream : std::uint32_t {
  brownian = 1,
  jumps = 2,
  tree_paths = 3,
  argument_cloud = 4,
};

/// Philox4x32-10 counter-based generator. Every draw is a pure function of
/// (seed, stream, a, b, block), so any subset of paths can be generated in
/// any order or on any thread with identical results.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream) noexcept : seed_(seed), stream_(stream) {}

  std::array<std::uint32_t, 4> raw(std::uint32_t a, std::uint32_t b, std::uint32_t block) const noexcept;
  /// Two uniforms in the open interval (0, 1), 53 bits each.
  std::array<double, 2> uniforms(std::uint32_t a, std::uint32_t b, std::uint32_t block) const noexcept;
  /// Two independent standard normals (Box-Muller).
  std::array<double, 2> normals(std::uint32_t a, std::uint32_t b, std::uint32_t block) const noexcept;

 private:
  std::uint64_t seed_;
  Stream stream_;
};

struct JumpEvent {
  double time = 0.0;  // in (0, T]
  int mark = 0;
  int step = 0;       // j such that time lies in (t_j, t_{j+1}]
};

/// Sampled driving noise. Either part may be absent (dim == 0 or no marks).
class PathBatch {
 public:
  PathBatch(TimeGrid grid, int dim, int n_paths, std::uint64_t seed, std::vector<double> increments,
            std::optional<MarkSpace> marks, std::vector<std::vector<JumpEvent>> jumps);

  const TimeGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return dim_; }
  int n_paths() const noexcept { return n_paths_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool has_jumps() const noexcept { return marks_.has_value(); }
  const MarkSpace& marks() const;
  int n_marks() const noexcept { return marks_ ? marks_->size() : 0; }

  /// Row-major (path, step, dim).
  std::span<const double> increments() const noexcept { return increments_; }
  std::span<const double> increment(int path, int step) const;
  std::span<const JumpEvent> jumps(int path) const { return jumps_.at(path); }

  bool operator==(const PathBatch& other) const;

  /// Paths [begin, end) as a batch of their own (same seed tag).
  PathBatch slice(int begin, int end) const;

 private:
  TimeGrid grid_;
  int dim_;
  int n_paths_;
  std::uint64_t seed_;
  std::vector<double> increments_;
  std::optional<MarkSpace> marks_;
  std::vector<std::vector<JumpEvent>> jumps_;
};

PathBatch simulate_brownian(const TimeGrid& grid, int dim, int n_paths, std::uint64_t seed, int threads = 1);
PathBatch simulate_poisson_measure(const TimeGrid& grid, const MarkSpace& marks, int n_paths,
                                   std::uint64_t seed, int threads = 1);
/// Brownian and jump parts from one seed (streams are disjoint).
PathBatch simulate_paths(const TimeGrid& grid, int dim, const MarkSpace& marks, int n_paths,
                         std::uint64_t seed, int threads = 1);

/// Node-wise Markov states of every path in a batch.
class PathStates {
 public:
  explicit PathStates(const PathBatch& batch);

  int n_paths() const noexcept { return n_paths_; }
  int steps() const noexcept { return steps_; }
  int dim() const noexcept { return dim_; }
  int n_marks() const noexcept { return n_marks_; }

  StateView at(int path, int node) const;
  /// Number of mark-i jumps falling in step j of a path.
  int step_jumps(int path, int step, int mark) const;

 private:
  TimeGrid grid_;
  int n_paths_, steps_, dim_, n_marks_;
  std::vector<double> brownian_;   // (path, node, dim)
  std::vector<int> counts_;        // (path, node, mark)
  std::vector<int> step_counts_;   // (path, step, mark)
};

}  // namespace bsdej
