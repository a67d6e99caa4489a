#include "bsdej/generators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "bsdej/errors.hpp"
#include "bsdej/stochastic_integrals.hpp"

namespace bsdej {

namespace {

std::string fmt(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

double euclid(std::span<const double> z) {
  double s = 0.0;
  for (double x : z) s += x * x;
  return std::sqrt(s);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void BSDEProblem::validate() const {
  if (dim < 1) throw InvalidArgument("problem: dimension must be >= 1");
  if (!generator.f) throw InvalidArgument("problem: generator has no driver");
  if (!terminal.xi) throw InvalidArgument("problem: terminal condition missing");
  if (!(generator.kappa >= 0.0)) throw InvalidArgument("problem: kappa must be >= 0");
  if (!(generator.gamma >= 0.0)) throw InvalidArgument("problem: gamma must be >= 0");
  if (generator.alpha && !(*generator.alpha > 0.0 && *generator.alpha < 1.0)) {
    throw InvalidArgument("problem: alpha must lie in (0, 1)");
  }
  if (!(generator.p >= 1.0)) throw InvalidArgument("problem: p must be >= 1");
}

double BSDEProblem::driver_at_zero(const StateView& s) const {
  thread_local std::vector<double> zeros;
  const std::size_t need = static_cast<std::size_t>(std::max(dim, marks.size()));
  if (zeros.size() < need) zeros.assign(need, 0.0);
  return generator.f(s, 0.0, std::span<const double>(zeros.data(), dim),
                     std::span<const double>(zeros.data(), marks.size()));
}

std::string BSDEProblem::fingerprint() const {
  std::ostringstream text;
  text << "T=" << fmt(grid.horizon()) << ";N=" << grid.steps() << ";d=" << dim << ";marks=";
  for (int i = 0; i < marks.size(); ++i) {
    text << "[";
    for (double x : marks.mark(i)) text << fmt(x) << ",";
    text << "@" << fmt(marks.intensity(i)) << "]";
  }
  text << ";f=" << generator.description << ";kappa=" << fmt(generator.kappa) << ";xi=" << terminal.description;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text.str());
  return hex.str();
}

double q_n(double x, double n) { return std::max(-n, std::min(n, x)); }

BSDEProblem truncate_problem(const BSDEProblem& problem, double n) {
  if (!(n > 0.0)) throw InvalidArgument("truncate_problem: level must be positive");
  BSDEProblem out = problem;
  const int dim = problem.dim;
  const int m = problem.marks.size();
  DriverFn f = problem.generator.f;
  out.generator.f = [f, n, dim, m](const StateView& s, double y, std::span<const double> z,
                                   std::span<const double> v) {
    thread_local std::vector<double> zeros;
    const std::size_t need = static_cast<std::size_t>(std::max(dim, m));
    if (zeros.size() < need) zeros.assign(need, 0.0);
    const double f0 = f(s, 0.0, std::span<const double>(zeros.data(), dim), std::span<const double>(zeros.data(), m));
    return f(s, y, z, v) + (q_n(f0, n) - f0);
  };
  StateFn xi = problem.terminal.xi;
  out.terminal.xi = [xi, n](const StateView& s) { return q_n(xi(s), n); };
  out.generator.description = "trunc(" + fmt(n) + "," + problem.generator.description + ")";
  out.terminal.description = "trunc(" + fmt(n) + "," + problem.terminal.description + ")";
  out.terminal.p = 2.0;
  return out;
}

double psi_bound(const GeneratorSpec& spec, double r) { return spec.kappa * r; }

GeneratorSpec affine_generator(double a, double b, double c, double constant, double brownian, const MarkSpace& marks,
                               int dim, double p) {
  std::vector<double> lambda(marks.intensities().begin(), marks.intensities().end());
  GeneratorSpec spec;
  spec.f = [=](const StateView& s, double y, std::span<const double> z, std::span<const double> v) {
    double zsum = 0.0;
    for (double x : z) zsum += x;
    double vsum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) vsum += v[i] * lambda[i];
    const double w = s.brownian.empty() ? 0.0 : s.brownian[0];
    return a * y + b * zsum + c * vsum + constant + brownian * w;
  };
  // |c sum dv_i lambda_i| <= |c| Lambda^{1-1/p} ||dv||_p by Hoelder.
  spec.kappa = std::max({std::abs(a), std::abs(b) * std::sqrt(static_cast<double>(dim)),
                         std::abs(c) * std::pow(marks.total_intensity(), 1.0 - 1.0 / p)});
  spec.p = p;
  spec.depends_on_zv = (b != 0.0 || c != 0.0);
  spec.description = "affine(a=" + fmt(a) + ",b=" + fmt(b) + ",c=" + fmt(c) + ",const=" + fmt(constant) +
                     ",brownian=" + fmt(brownian) + ",p=" + fmt(p) + ")";
  return spec;
}

GeneratorSpec lipschitz_smooth_generator(double a, double b, double c, double constant, const MarkSpace& marks,
                                         int /*dim*/, double p) {
  GeneratorSpec spec;
  spec.f = [=](const StateView&, double y, std::span<const double> z, std::span<const double> v) {
    return a * std::sin(y) + b * z[0] + c * sectional_norm(v, marks, p) + constant;
  };
  spec.kappa = std::max({std::abs(a), std::abs(b), std::abs(c)});
  spec.p = p;
  spec.depends_on_zv = (b != 0.0 || c != 0.0);
  spec.description = "lipschitz_smooth(a=" + fmt(a) + ",b=" + fmt(b) + ",c=" + fmt(c) + ",const=" + fmt(constant) +
                     ",p=" + fmt(p) + ")";
  return spec;
}

GeneratorSpec zv_coupled_generator(double k, double a, double constant, const MarkSpace& marks, int /*dim*/,
                                   double p) {
  GeneratorSpec spec;
  spec.f = [=](const StateView&, double y, std::span<const double> z, std::span<const double> v) {
    return a * y + k * (euclid(z) + sectional_norm(v, marks, p)) + constant;
  };
  spec.kappa = std::max(std::abs(a), std::abs(k));
  spec.p = p;
  spec.depends_on_zv = (k != 0.0);
  spec.description = "zv_coupled(k=" + fmt(k) + ",a=" + fmt(a) + ",const=" + fmt(constant) + ",p=" + fmt(p) + ")";
  return spec;
}

TerminalSpec constant_terminal(double c) {
  return TerminalSpec{[c](const StateView&) { return c; }, 2.0, "constant(" + fmt(c) + ")"};
}

TerminalSpec brownian_terminal(BrownianShape shape, double scale, double coef, double shift, int component) {
  if (component < 0) throw InvalidArgument("brownian terminal: negative component");
  static constexpr const char* kNames[] = {"linear", "square", "exp", "sin", "abs"};
  TerminalSpec t;
  t.xi = [=](const StateView& s) {
    if (component >= static_cast<int>(s.brownian.size())) {
      throw InvalidArgument("brownian terminal: component exceeds Brownian dimension");
    }
    const double x = coef * s.brownian[component];
    double phi = 0.0;
    switch (shape) {
      case BrownianShape::linear: phi = x; break;
      case BrownianShape::square: phi = x * x; break;
      case BrownianShape::exp: phi = std::exp(x); break;
      case BrownianShape::sin: phi = std::sin(x); break;
      case BrownianShape::abs: phi = std::abs(x); break;
    }
    return scale * phi + shift;
  };
  t.p = 2.0;
  t.description = std::string("brownian(") + kNames[static_cast<int>(shape)] + ",scale=" + fmt(scale) +
                  ",coef=" + fmt(coef) + ",shift=" + fmt(shift) + ",component=" + std::to_string(component) + ")";
  return t;
}

TerminalSpec jump_count_terminal(std::vector<double> weights, double scale, bool compensated, double shift,
                                 const MarkSpace& marks, double horizon) {
  if (weights.empty()) weights.assign(marks.size(), 1.0);
  if (static_cast<int>(weights.size()) != marks.size()) {
    throw InvalidArgument("jump-count terminal: one weight per mark required");
  }
  double mean = 0.0;
  for (int i = 0; i < marks.size(); ++i) mean += weights[i] * marks.intensity(i) * horizon;
  const double offset = compensated ? mean : 0.0;
  TerminalSpec t;
  t.xi = [=](const StateView& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) sum += weights[i] * s.jump_counts[i];
    return scale * (sum - offset) + shift;
  };
  t.p = 2.0;
  std::string w;
  for (double x : weights) w += fmt(x) + ";";
  t.description = "jump_count(w=" + w + "scale=" + fmt(scale) + ",compensated=" + (compensated ? "1" : "0") +
                  ",shift=" + fmt(shift) + ")";
  return t;
}

TerminalSpec sum_terminal(std::vector<TerminalSpec> terms) {
  if (terms.empty()) throw InvalidArgument("sum terminal: no terms");
  std::string desc = "sum(";
  double p = terms.front().p;
  for (const auto& t : terms) {
    desc += t.description + ";";
    p = std::min(p, t.p);
  }
  desc += ")";
  TerminalSpec out;
  out.xi = [terms = std::move(terms)](const StateView& s) {
    double total = 0.0;
    for (const auto& t : terms) total += t.xi(s);
    return total;
  };
  out.p = p;
  out.description = desc;
  return out;
}

ArgumentCloud sample_argument_cloud(int dim, int n_marks, double horizon, int n_pairs, double radius,
                                    std::uint64_t seed) {
  if (n_pairs < 1) throw InvalidArgument("argument cloud: need at least one pair");
  const CounterRng rng(seed, Stream::argument_cloud);
  ArgumentCloud cloud;
  cloud.pairs.reserve(n_pairs);
  auto uniform_sym = [&](std::uint32_t pair, std::uint32_t slot) {
    const auto u = rng.uniforms(pair, slot / 2, 0);
    return radius * (2.0 * u[slot % 2] - 1.0);
  };
  for (int k = 0; k < n_pairs; ++k) {
    const auto pk = static_cast<std::uint32_t>(k);
    std::uint32_t slot = 0;
    ArgumentPoint a;
    a.t = horizon * rng.uniforms(pk, 1000, 0)[0];
    for (int l = 0; l < dim; ++l) a.brownian.push_back(uniform_sym(pk, slot++));
    for (int i = 0; i < n_marks; ++i) a.jump_counts.push_back(static_cast<int>(4.0 * rng.uniforms(pk, 1001 + i, 0)[0]));
    a.y = uniform_sym(pk, slot++);
    for (int l = 0; l < dim; ++l) a.z.push_back(uniform_sym(pk, slot++));
    for (int i = 0; i < n_marks; ++i) a.v.push_back(uniform_sym(pk, slot++));
    // Partner at a scale cycling through radius * 10^{0..-3} to probe local slopes,
    // moving either every coordinate or a single one (which attains the modulus
    // of separable drivers).
    const double scale = std::pow(10.0, -(k % 4));
    const int axis = (k / 4) % (2 + dim + n_marks) - 1;  // -1: all; 0: y; then z_l; then v_i
    auto moves = [axis](int coordinate) { return axis < 0 || axis == coordinate; };
    ArgumentPoint b = a;
    if (moves(0)) b.y = a.y + scale * uniform_sym(pk, slot);
    ++slot;
    for (int l = 0; l < dim; ++l, ++slot) {
      if (moves(1 + l)) b.z[l] = a.z[l] + scale * uniform_sym(pk, slot);
    }
    for (int i = 0; i < n_marks; ++i, ++slot) {
      if (moves(1 + dim + i)) b.v[i] = a.v[i] + scale * uniform_sym(pk, slot);
    }
    cloud.pairs.emplace_back(std::move(a), std::move(b));
  }
  return cloud;
}

LipschitzReport check_lipschitz(const GeneratorSpec& spec, const MarkSpace& marks, const ArgumentCloud& cloud) {
  LipschitzReport report;
  report.declared = spec.kappa;
  std::vector<double> dz, dv;
  for (const auto& [a, b] : cloud.pairs) {
    dz.resize(a.z.size());
    dv.resize(a.v.size());
    for (std::size_t l = 0; l < a.z.size(); ++l) dz[l] = a.z[l] - b.z[l];
    for (std::size_t i = 0; i < a.v.size(); ++i) dv[i] = a.v[i] - b.v[i];
    const double denom = std::abs(a.y - b.y) + euclid(dz) + (dv.empty() ? 0.0 : sectional_norm(dv, marks, spec.p));
    if (!(denom > 0.0)) continue;
    const double ratio = std::abs(spec(a.state(), a.y, a.z, a.v) - spec(b.state(), b.y, b.z, b.v)) / denom;
    if (ratio > report.kappa_hat) {
      report.kappa_hat = ratio;
      report.worst = std::make_pair(a, b);
    }
  }
  report.pass = report.kappa_hat <= spec.kappa * (1.0 + 1e-9);
  return report;
}

GrowthReport check_growth(const GeneratorSpec& spec, const MarkSpace& marks, const ArgumentCloud& cloud) {
  GrowthReport report;
  const double alpha = spec.alpha.value_or(0.5);
  for (const auto& pair : cloud.pairs) {
    for (const ArgumentPoint* pt : {&pair.first, &pair.second}) {
      const std::vector<double> z0(pt->z.size(), 0.0), v0(pt->v.size(), 0.0);
      const StateView s = pt->state();
      const double diff = std::abs(spec(s, pt->y, pt->z, pt->v) - spec(s, pt->y, z0, v0));
      if (diff == 0.0) continue;
      const double vnorm = pt->v.empty() ? 0.0 : sectional_norm(pt->v, marks, spec.p);
      const double bound = spec.gamma * std::pow(spec.growth_process(s) + std::abs(pt->y) + euclid(pt->z) + vnorm, alpha);
      const double ratio = bound > 0.0 ? diff / bound : std::numeric_limits<double>::infinity();
      if (ratio > report.max_ratio) {
        report.max_ratio = ratio;
        report.worst = *pt;
      }
    }
  }
  report.pass = report.max_ratio <= 1.0 + 1e-9;
  return report;
}

namespace {

std::pair<double, double> mean_and_se(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

IntegrabilityReport check_integrability(const BSDEProblem& problem, int n_paths, std::uint64_t seed, int threads) {
  problem.validate();
  const PathBatch batch = simulate_paths(problem.grid, problem.dim, problem.marks, n_paths, seed, threads);
  const PathStates states(batch);
  const int steps = problem.grid.steps();
  const double dt = problem.grid.dt();
  std::vector<double> xi(n_paths), f0(n_paths);
  for (int k = 0; k < n_paths; ++k) {
    xi[k] = std::abs(problem.terminal(states.at(k, steps)));
    double integral = 0.0;
    for (int j = 0; j < steps; ++j) integral += std::abs(problem.driver_at_zero(states.at(k, j))) * dt;
    f0[k] = integral;
  }
  IntegrabilityReport r;
  std::tie(r.xi_abs_mean, r.xi_abs_se) = mean_and_se(xi);
  std::tie(r.f0_integral_mean, r.f0_integral_se) = mean_and_se(f0);
  r.estimator = "mc";
  r.n_paths = n_paths;
  return r;
}

IntegrabilityReport check_integrability(const BSDEProblem& problem, const ScenarioTree& tree) {
  problem.validate();
  const int steps = tree.depth();
  const double dt = tree.grid().dt();
  // Backward recursion of E[|xi| | node] and E[int_t^T |f0| ds | node].
  std::vector<double> xi_next(tree.layer_size(steps)), f_next(tree.layer_size(steps), 0.0);
  for (std::size_t n = 0; n < xi_next.size(); ++n) xi_next[n] = std::abs(problem.terminal(tree.state(steps, n)));
  std::vector<double> z(tree.dim()), v(tree.n_marks());
  for (int k = steps - 1; k >= 0; --k) {
    std::vector<double> xi_cur(tree.layer_size(k)), f_cur(tree.layer_size(k));
    for (std::size_t n = 0; n < xi_cur.size(); ++n) {
      project_node(tree, k, n, xi_next, xi_cur[n], z, v);
      double cont = 0.0;
      project_node(tree, k, n, f_next, cont, z, v);
      f_cur[n] = cont + std::abs(problem.driver_at_zero(tree.state(k, n))) * dt;
    }
    xi_next = std::move(xi_cur);
    f_next = std::move(f_cur);
  }
  IntegrabilityReport r;
  r.xi_abs_mean = xi_next[0];
  r.f0_integral_mean = f_next[0];
  r.estimator = "tree";
  return r;
}

}  // namespace bsdej
