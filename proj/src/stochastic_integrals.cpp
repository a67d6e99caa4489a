#include "bsdej/stochastic_integrals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsdej/errors.hpp"
#include "bsdej/parallel.hpp"

namespace bsdej {

RandomField::RandomField(TimeGrid grid, MarkSpace marks, int n_paths, std::vector<double> values,
                         std::vector<double> weights)
    : grid_(grid), marks_(std::move(marks)), n_paths_(n_paths), values_(std::move(values)), weights_(std::move(weights)) {
  if (n_paths_ < 1) throw InvalidArgument("random field: n_paths must be >= 1");
  const std::size_t expected = static_cast<std::size_t>(n_paths_) * grid_.steps() * marks_.size();
  if (values_.size() != expected) throw InvalidArgument("random field: values have wrong shape");
  if (!weights_.empty() && static_cast<int>(weights_.size()) != n_paths_) {
    throw InvalidArgument("random field: weights have wrong length");
  }
  for (double x : values_) {
    if (!std::isfinite(x)) throw InvalidArgument("random field: non-finite value");
  }
}

RandomField RandomField::constant(TimeGrid grid, MarkSpace marks, int n_paths, double c) {
  const std::size_t n = static_cast<std::size_t>(n_paths) * grid.steps() * marks.size();
  return RandomField(grid, std::move(marks), n_paths, std::vector<double>(n, c));
}

RandomField RandomField::per_mark(TimeGrid grid, MarkSpace marks, int n_paths, std::span<const double> g) {
  if (static_cast<int>(g.size()) != marks.size()) throw InvalidArgument("random field: one value per mark required");
  const std::size_t cells = static_cast<std::size_t>(n_paths) * grid.steps();
  std::vector<double> values(cells * g.size());
  for (std::size_t c = 0; c < cells; ++c) std::copy(g.begin(), g.end(), values.begin() + c * g.size());
  return RandomField(grid, std::move(marks), n_paths, std::move(values));
}

std::span<const double> RandomField::section(int path, int step) const {
  const std::size_t off = (static_cast<std::size_t>(path) * grid_.steps() + step) * n_marks();
  return std::span<const double>(values_).subspan(off, n_marks());
}

std::vector<double> IntegralResult::terminal_values() const {
  std::vector<double> out(n_paths);
  for (int k = 0; k < n_paths; ++k) out[k] = terminal(k);
  return out;
}

std::vector<double> IntegralResult::terminal_qv() const {
  std::vector<double> out(n_paths);
  for (int k = 0; k < n_paths; ++k) out[k] = qv(k, grid.steps());
  return out;
}

namespace {

void require_compatible(const RandomField& v, const PathBatch& batch) {
  if (!(v.grid() == batch.grid())) throw InvalidArgument("poisson integral: grid mismatch between field and batch");
  if (!batch.has_jumps() || !(v.marks() == batch.marks())) {
    throw InvalidArgument("poisson integral: mark space mismatch between field and batch");
  }
  if (v.n_paths() != batch.n_paths()) throw InvalidArgument("poisson integral: path count mismatch");
}

double compensator_rate(std::span<const double> section, const MarkSpace& marks) {
  double rate = 0.0;
  for (int i = 0; i < marks.size(); ++i) rate += section[i] * marks.intensity(i);
  return rate;
}

}  // namespace

std::vector<double> brownian_integral(std::span<const double> z, const PathBatch& batch) {
  const int n = batch.n_paths();
  const int steps = batch.grid().steps();
  const int d = batch.dim();
  if (d < 1 || z.size() != static_cast<std::size_t>(n) * steps * d) {
    throw InvalidArgument("brownian integral: integrand must be shaped (n_paths, steps, dim)");
  }
  std::vector<double> out(static_cast<std::size_t>(n) * (steps + 1), 0.0);
  for (int k = 0; k < n; ++k) {
    double* row = out.data() + static_cast<std::size_t>(k) * (steps + 1);
    for (int j = 0; j < steps; ++j) {
      const auto db = batch.increment(k, j);
      const double* zk = z.data() + (static_cast<std::size_t>(k) * steps + j) * d;
      double dot = 0.0;
      for (int l = 0; l < d; ++l) dot += zk[l] * db[l];
      row[j + 1] = row[j] + dot;
    }
  }
  return out;
}

IntegralResult poisson_integral_compensated(const RandomField& v, const PathBatch& batch, int threads) {
  require_compatible(v, batch);
  const int n = batch.n_paths();
  const TimeGrid& grid = batch.grid();
  const int steps = grid.steps();
  const double dt = grid.dt();
  IntegralResult result{grid, n, std::vector<double>(static_cast<std::size_t>(n) * (steps + 1), 0.0),
                        std::vector<double>(static_cast<std::size_t>(n) * (steps + 1), 0.0),
                        std::vector<std::vector<JumpRecord>>(n)};
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t kk = begin; kk < end; ++kk) {
      const int k = static_cast<int>(kk);
      const auto events = batch.jumps(k);
      auto& records = result.jumps[k];
      records.reserve(events.size());
      double* vals = result.node_values.data() + kk * (steps + 1);
      double* qvs = result.node_qv.data() + kk * (steps + 1);
      double jump_sum = 0.0, comp_sum = 0.0, qv = 0.0;
      std::size_t e = 0;
      for (int j = 0; j < steps; ++j) {
        const auto section = v.section(k, j);
        const double rate = compensator_rate(section, batch.marks());
        const double t0 = grid.node(j);
        for (; e < events.size() && events[e].step == j; ++e) {
          const double val = section[events[e].mark];
          const double before = jump_sum - (comp_sum + rate * (events[e].time - t0));
          jump_sum += val;
          qv += val * val;
          records.push_back(JumpRecord{events[e].time, j, events[e].mark, before, before + val, qv});
        }
        comp_sum += rate * dt;
        vals[j + 1] = jump_sum - comp_sum;
        qvs[j + 1] = qv;
      }
    }
  });
  return result;
}

std::vector<double> quadratic_variation(const RandomField& v, const PathBatch& batch) {
  require_compatible(v, batch);
  const int n = batch.n_paths();
  const int steps = batch.grid().steps();
  std::vector<double> out(static_cast<std::size_t>(n) * (steps + 1), 0.0);
  for (int k = 0; k < n; ++k) {
    double* row = out.data() + static_cast<std::size_t>(k) * (steps + 1);
    const auto events = batch.jumps(k);
    std::size_t e = 0;
    double qv = 0.0;
    for (int j = 0; j < steps; ++j) {
      for (; e < events.size() && events[e].step == j; ++e) {
        const double val = v(k, j, events[e].mark);
        qv += val * val;
      }
      row[j + 1] = qv;
    }
  }
  return out;
}

JumpIdentityReport jump_identity_check(const RandomField& v, const IntegralResult& result, const PathBatch& batch) {
  constexpr double kUlps = 4.0 * std::numeric_limits<double>::epsilon();
  constexpr double kDriftTol = 1e-12;
  JumpIdentityReport report;
  report.per_path.assign(batch.n_paths(), true);
  const TimeGrid& grid = batch.grid();
  const int steps = grid.steps();
  auto fail = [&](int path, int jump, double time, double expected, double observed) {
    if (report.per_path[path]) ++report.failing_paths;
    report.per_path[path] = false;
    report.pass = false;
    if (!report.first_violation) report.first_violation = JumpIdentityReport::Violation{path, jump, time, expected, observed};
  };
  for (int k = 0; k < batch.n_paths(); ++k) {
    const auto events = batch.jumps(k);
    const auto& records = result.jumps.at(k);
    if (records.size() != events.size()) {
      fail(k, static_cast<int>(records.size()), 0.0, static_cast<double>(events.size()),
           static_cast<double>(records.size()));
      continue;
    }
    // Jump sizes.
    for (std::size_t e = 0; e < records.size(); ++e) {
      const double expected = v(k, events[e].step, events[e].mark);
      const double observed = records[e].after - records[e].before;
      const double scale = std::max({std::abs(records[e].after), std::abs(records[e].before), std::abs(expected)});
      if (std::abs(observed - expected) > kUlps * scale) {
        fail(k, static_cast<int>(e), records[e].time, expected, observed);
      }
    }
    // Between jumps M moves only by the compensator drift -rate * elapsed.
    double m_prev = result.value(k, 0);
    double t_prev = 0.0;
    std::size_t e = 0;
    for (int j = 0; j < steps; ++j) {
      const double rate = compensator_rate(v.section(k, j), batch.marks());
      for (; e < records.size() && records[e].step == j; ++e) {
        const double expected = m_prev - rate * (records[e].time - t_prev);
        const double scale = std::max({1.0, std::abs(expected), std::abs(records[e].before)});
        if (std::abs(records[e].before - expected) > kDriftTol * scale) {
          fail(k, static_cast<int>(e), records[e].time, expected, records[e].before);
        }
        m_prev = records[e].after;
        t_prev = records[e].time;
      }
      const double t_next = grid.node(j + 1);
      const double expected = m_prev - rate * (t_next - t_prev);
      const double observed = result.value(k, j + 1);
      const double scale = std::max({1.0, std::abs(expected), std::abs(observed)});
      if (std::abs(observed - expected) > kDriftTol * scale) fail(k, -1, t_next, expected, observed);
      m_prev = observed;
      t_prev = t_next;
    }
  }
  return report;
}

double sectional_norm(std::span<const double> v, const MarkSpace& marks, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("sectional norm: p must be >= 1");
  if (static_cast<int>(v.size()) != marks.size()) throw InvalidArgument("sectional norm: one value per mark required");
  double s = 0.0;
  for (int i = 0; i < marks.size(); ++i) s += std::pow(std::abs(v[i]), p) * marks.intensity(i);
  return std::pow(s, 1.0 / p);
}

double lp_field_norm(const RandomField& v, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("L^p field norm: p must be >= 1");
  const int steps = v.grid().steps();
  const double dt = v.grid().dt();
  double total = 0.0;
  for (int k = 0; k < v.n_paths(); ++k) {
    double path_sum = 0.0;
    for (int j = 0; j < steps; ++j) {
      const auto s = v.section(k, j);
      for (int i = 0; i < v.n_marks(); ++i) path_sum += std::pow(std::abs(s[i]), p) * v.marks().intensity(i) * dt;
    }
    total += v.weight(k) * path_sum;
  }
  return std::pow(total, 1.0 / p);
}

}  // namespace bsdej
