#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsdej/randomness.hpp"
#include "bsdej/scenario_tree.hpp"
#include "bsdej/state.hpp"

namespace bsdej {

/// f(t, omega, y, z, v) with omega entering only through the Markov state.
/// z has the Brownian dimension, v one entry per mark (the section V_t(e_i)).
using DriverFn =
    std::function<double(const StateView& state, double y, std::span<const double> z, std::span<const double> v)>;
using StateFn = std::function<double(const StateView& state)>;

struct GeneratorSpec {
  DriverFn f;
  /// Declared Lipschitz modulus in (y, z, v), v measured in the sectional L^p norm.
  double kappa = 0.0;
  /// Sublinear growth exponent of f(t,y,z,v) - f(t,y,0,0); absent when not declared.
  std::optional<double> alpha;
  double gamma = 0.0;
  /// Non-negative growth process; constant zero when unset.
  StateFn g;
  /// Integrability index used for the sectional norm of v.
  double p = 2.0;
  bool depends_on_zv = true;
  /// Canonical text of the generator, part of the problem fingerprint.
  std::string description;

  double operator()(const StateView& s, double y, std::span<const double> z, std::span<const double> v) const {
    return f(s, y, z, v);
  }
  double growth_process(const StateView& s) const { return g ? g(s) : 0.0; }
};

struct TerminalSpec {
  StateFn xi;
  double p = 1.0;
  std::string description;

  double operator()(const StateView& s) const { return xi(s); }
};

struct BSDEProblem {
  TimeGrid grid;
  MarkSpace marks;
  int dim = 1;
  GeneratorSpec generator;
  TerminalSpec terminal;

  /// Throws InvalidArgument on inconsistent data.
  void validate() const;
  /// f(t, state, 0, 0, 0).
  double driver_at_zero(const StateView& s) const;
  /// 16 hex digits identifying (grid, marks, dim, generator, terminal).
  std::string fingerprint() const;
};

/// Symmetric clamp max(-n, min(n, x)).
double q_n(double x, double n);

/// Replaces xi by q_n(xi) and f by f - f(.,0,0,0) + q_n(f(.,0,0,0)). The
/// correction q_n(f0) - f0 is added as one term, so an inactive clamp
/// reproduces f bit for bit.
BSDEProblem truncate_problem(const BSDEProblem& problem, double n);

/// psi_r(t) = sup_{|y|<=r} |f(t,y,0,0) - f(t,0,0,0)| is bounded by kappa * r
/// for Lipschitz f; this is the only form in which it is reported.
double psi_bound(const GeneratorSpec& spec, double r);

// ---------------------------------------------------------------------------
// Built-in forms.

/// f = a y + b sum_l z_l + c sum_i v_i lambda_i + constant + brownian * W_1.
GeneratorSpec affine_generator(double a, double b, double c, double constant, double brownian, const MarkSpace& marks,
                               int dim, double p);
/// f = a sin(y) + b z_1 + c ||v|| + constant.
GeneratorSpec lipschitz_smooth_generator(double a, double b, double c, double constant, const MarkSpace& marks,
                                         int dim, double p);
/// f = a y + k (|z| + ||v||) + constant.
GeneratorSpec zv_coupled_generator(double k, double a, double constant, const MarkSpace& marks, int dim, double p);

TerminalSpec constant_terminal(double c);
enum class BrownianShape { linear, square, exp, sin, abs };
/// xi = scale * shape(coef * W_component) + shift.
TerminalSpec brownian_terminal(BrownianShape shape, double scale, double coef, double shift, int component = 0);
/// xi = scale * (sum_i w_i N^i_T - [compensated] sum_i w_i lambda_i T) + shift.
TerminalSpec jump_count_terminal(std::vector<double> weights, double scale, bool compensated, double shift,
                                 const MarkSpace& marks, double horizon);
TerminalSpec sum_terminal(std::vector<TerminalSpec> terms);

// ---------------------------------------------------------------------------
// Empirical assumption checks.

struct ArgumentPoint {
  double t = 0.0;
  std::vector<double> brownian;
  std::vector<int> jump_counts;
  double y = 0.0;
  std::vector<double> z;
  std::vector<double> v;
  StateView state() const { return StateView{t, brownian, jump_counts}; }
};

/// Pairs sharing (t, state) and differing in (y, z, v) at several scales.
struct ArgumentCloud {
  std::vector<std::pair<ArgumentPoint, ArgumentPoint>> pairs;
};

ArgumentCloud sample_argument_cloud(int dim, int n_marks, double horizon, int n_pairs, double radius,
                                    std::uint64_t seed);

struct LipschitzReport {
  double kappa_hat = 0.0;
  double declared = 0.0;
  bool pass = true;
  std::optional<std::pair<ArgumentPoint, ArgumentPoint>> worst;
};

LipschitzReport check_lipschitz(const GeneratorSpec& spec, const MarkSpace& marks, const ArgumentCloud& cloud);

struct GrowthReport {
  /// max |f(y,z,v) - f(y,0,0)| / (gamma (g + |y| + |z| + ||v||)^alpha); 0 when f ignores (z, v).
  double max_ratio = 0.0;
  bool pass = true;
  std::optional<ArgumentPoint> worst;
};

GrowthReport check_growth(const GeneratorSpec& spec, const MarkSpace& marks, const ArgumentCloud& cloud);

struct IntegrabilityReport {
  double xi_abs_mean = 0.0;
  double xi_abs_se = 0.0;
  double f0_integral_mean = 0.0;
  double f0_integral_se = 0.0;
  std::string estimator;
  int n_paths = 0;
};

IntegrabilityReport check_integrability(const BSDEProblem& problem, int n_paths, std::uint64_t seed, int threads = 1);
/// Exact expectations by backward recursion over tree nodes.
IntegrabilityReport check_integrability(const BSDEProblem& problem, const ScenarioTree& tree);

}  // namespace bsdej
