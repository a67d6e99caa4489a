#include <algorithm>
#include <cmath>
#include <sstream>

#include "backward.hpp"
#include "bsdej/solver.hpp"

namespace bsdej {

double picard_norm_index(const GeneratorSpec& generator) {
  if (!generator.alpha || !(*generator.alpha > 0.0)) return 1.5;
  return std::clamp((1.0 - 0.05) / *generator.alpha, 1.05, 1.95);
}

namespace {

double certificate_bound(double kappa, double c_emp, double length, double q) {
  return kappa * c_emp * std::pow(length, 1.0 - q / 2.0);
}

void certify(SubdivisionPlan& plan, double kappa, double q, double c_emp) {
  plan.intervals.clear();
  for (int i = 0; i < plan.count(); ++i) {
    IntervalCertificate c;
    c.start = plan.breakpoints[i];
    c.end = plan.breakpoints[i + 1];
    c.q = q;
    c.kappa = kappa;
    c.c_emp = c_emp;
    c.bound = certificate_bound(kappa, c_emp, c.end - c.start, q);
    c.certified = c.bound <= plan.safety * (1.0 + 1e-12);
    plan.intervals.push_back(c);
  }
}

std::string ratio_text(const PicardTrace& trace, int last) {
  std::ostringstream out;
  const int first = std::max(0, last - 4);
  for (int n = first; n <= last; ++n) {
    if (n > first) out << ", ";
    out << "r_" << n << "=";
    if (trace.ratio[n]) {
      out << *trace.ratio[n];
    } else {
      out << "n/a";
    }
  }
  return out.str();
}

// Picard iteration on layers [k0, k1]; Y on layer k1 of sol is the terminal value.
PicardTrace picard_interval(const BSDEProblem& problem, const SolverContext& ctx, Solution& sol, int k0, int k1,
                            const PicardOptions& options, const PathSet& paths, double q) {
  PicardTrace trace;
  trace.q = q;
  trace.interval_start = problem.grid.node(k0);
  trace.interval_length = problem.grid.node(k1) - problem.grid.node(k0);

  Solution prev = sol;
  prev.fill(k0, k1, options.init_y, options.init_z, options.init_v, true);
  int run = 0;
  for (int n = 0; n < options.max_iter; ++n) {
    Solution cur = prev;
    for (std::size_t s = 0; s < cur.slots(k1); ++s) cur.y(k1, s) = sol.y(k1, s);
    detail::backward(problem, ctx, cur, k0, k1, &prev);
    trace.dist.push_back(solution_distance(cur, prev, paths, q, k0, k1));
    trace.iterations = n + 1;
    if (n > 0) {
      const double before = trace.total(n - 1);
      const double after = trace.total(n);
      trace.ratio.push_back(before > 0.0 ? std::optional<double>(after / before) : std::nullopt);
      // ratio[n - 1] is r_{n-1}; divergence counts r_m >= 1 for m >= 1.
      const auto& r = trace.ratio.back();
      run = (n - 1 >= 1 && r && *r >= 1.0) ? run + 1 : 0;
    }
    prev = std::move(cur);
    if (trace.total(n) < options.tol) {
      trace.converged = true;
      break;
    }
    if (run >= options.divergence_window) {
      trace.diverged = true;
      std::ostringstream msg;
      msg << "Picard iteration does not contract on [" << trace.interval_start << ", "
          << trace.interval_start + trace.interval_length << "] (length " << trace.interval_length
          << "): " << ratio_text(trace, static_cast<int>(trace.ratio.size()) - 1)
          << "; subdivide the horizon";
      trace.message = msg.str();
      break;
    }
  }
  if (!trace.converged && !trace.diverged) {
    std::ostringstream msg;
    msg << "Picard iteration reached max_iter = " << options.max_iter << " with distance "
        << trace.total(static_cast<int>(trace.dist.size()) - 1);
    trace.message = msg.str();
  }
  sol.copy_range(prev, k0, k1);
  return trace;
}

}  // namespace

SubdivisionPlan subdivide_horizon(double horizon, double kappa, double q, double c_emp, double safety) {
  if (!(horizon > 0.0)) throw InvalidArgument("subdivide_horizon: horizon must be positive");
  if (!(q > 1.0 && q < 2.0)) throw InvalidArgument("subdivide_horizon: q must lie in (1, 2)");
  if (!(c_emp > 0.0)) throw InvalidArgument("subdivide_horizon: c_emp must be positive");
  if (!(safety > 0.0 && safety < 1.0)) throw InvalidArgument("subdivide_horizon: safety must lie in (0, 1)");
  if (!(kappa >= 0.0)) throw InvalidArgument("subdivide_horizon: kappa must be non-negative");
  const double e = 1.0 - q / 2.0;
  auto ok = [&](double k) { return certificate_bound(kappa, c_emp, horizon / k, q) <= safety; };
  double k = 1.0;
  if (!ok(1.0)) {
    // (T/K)^e <= safety / (kappa c)  <=>  K >= T (kappa c / safety)^{1/e}
    k = std::max(1.0, std::ceil(horizon * std::pow(kappa * c_emp / safety, 1.0 / e)));
    if (k > 1e9) throw InvalidArgument("subdivide_horizon: more than 1e9 intervals required");
    while (k > 1.0 && ok(k - 1.0)) k -= 1.0;
    while (!ok(k)) k += 1.0;
  }
  SubdivisionPlan plan;
  plan.safety = safety;
  plan.requested = static_cast<int>(k);
  const int count = plan.requested;
  plan.breakpoints.resize(count + 1);
  for (int i = 0; i <= count; ++i) plan.breakpoints[i] = horizon * i / count;
  plan.breakpoints.back() = horizon;
  certify(plan, kappa, q, c_emp);
  return plan;
}

SubdivisionPlan trivial_plan(double horizon, double kappa, double q) {
  SubdivisionPlan plan;
  plan.breakpoints = {0.0, horizon};
  plan.requested = 1;
  IntervalCertificate c;
  c.end = horizon;
  c.q = q;
  c.kappa = kappa;
  plan.intervals.push_back(c);
  return plan;
}

SubdivisionPlan snap_to_grid(const SubdivisionPlan& plan, const TimeGrid& grid) {
  if (plan.count() < 1) throw InvalidArgument("snap_to_grid: empty plan");
  SubdivisionPlan out = plan;
  out.nodes.clear();
  for (double s : plan.breakpoints) {
    const int node = std::clamp(static_cast<int>(std::lround(s / grid.dt())), 0, grid.steps());
    if (out.nodes.empty() || node > out.nodes.back()) out.nodes.push_back(node);
  }
  out.nodes.front() = 0;
  if (out.nodes.back() != grid.steps()) {
    if (out.nodes.size() > 1) out.nodes.back() = grid.steps();
    else out.nodes.push_back(grid.steps());
  }
  out.breakpoints.clear();
  for (int node : out.nodes) out.breakpoints.push_back(grid.node(node));
  const auto& c = plan.intervals.empty() ? IntervalCertificate{} : plan.intervals.front();
  certify(out, c.kappa, c.q, c.c_emp);
  return out;
}

double calibrate_c_emp(const PicardTrace& pilot, double kappa, double horizon) {
  if (!(kappa > 0.0)) throw InvalidArgument("calibrate_c_emp: kappa must be positive");
  // Largest ratio from n = 1 on; r_0 mostly reflects the starting point.
  std::optional<double> r;
  for (std::size_t n = 1; n < pilot.ratio.size(); ++n) {
    if (pilot.ratio[n] && (!r || *pilot.ratio[n] > *r)) r = pilot.ratio[n];
  }
  if (!r && !pilot.ratio.empty() && pilot.ratio[0]) r = pilot.ratio[0];
  if (!r || !(*r > 0.0)) throw InvalidArgument("calibrate_c_emp: pilot trace has no positive measured ratio");
  return *r / (kappa * std::pow(horizon, 1.0 - pilot.q / 2.0));
}

PicardResult chained_solve(const BSDEProblem& problem, const SubdivisionPlan& plan, const SolverContext& ctx,
                           const PicardOptions& options) {
  problem.validate();
  if (options.divergence_window < 1 || options.max_iter < 1 || !(options.tol > 0.0)) {
    throw InvalidArgument("picard options: tol > 0, max_iter >= 1 and divergence_window >= 1 required");
  }
  const SubdivisionPlan snapped = plan.nodes.empty() ? snap_to_grid(plan, problem.grid) : plan;
  const double q = options.q ? *options.q : picard_norm_index(problem.generator);
  if (!(q >= 1.0)) throw InvalidArgument("picard options: q must be >= 1");

  PicardResult result{ctx.blank(problem), {}, true, false, {}};
  Solution& sol = result.solution;
  detail::set_terminal(problem, sol);
  const PathSet paths = make_path_set(sol, ctx.paths);
  const int intervals = static_cast<int>(snapped.nodes.size()) - 1;
  for (int i = intervals - 1; i >= 0; --i) {
    const int k0 = snapped.nodes[i];
    const int k1 = snapped.nodes[i + 1];
    PicardTrace trace;
    try {
      trace = picard_interval(problem, ctx, sol, k0, k1, options, paths, q);
    } catch (const NumericError& e) {
      std::ostringstream msg;
      msg << "interval " << i << " [" << problem.grid.node(k0) << ", " << problem.grid.node(k1) << "]: " << e.what();
      throw NumericError(msg.str());
    } catch (const ConditioningError& e) {
      std::ostringstream msg;
      msg << "interval " << i << " [" << problem.grid.node(k0) << ", " << problem.grid.node(k1) << "]: " << e.what();
      throw ConditioningError(msg.str(), e.step());
    }
    result.traces.push_back(trace);
    if (!trace.converged) {
      result.converged = false;
      result.diverged = trace.diverged;
      result.message = trace.message;
      break;
    }
  }
  if (sol.representation() == Representation::paths && result.converged) {
    // The Picard limit is the direct regression solve; its sectioned SE applies.
    sol.set_y0_se(sectioned_y0_standard_error(problem, *ctx.batch, ctx.basis, ctx.fixpoint, 20, ctx.threads));
  }
  return result;
}

PicardResult picard_solve(const BSDEProblem& problem, const SolverContext& ctx, const PicardOptions& options) {
  const double q = options.q ? *options.q : picard_norm_index(problem.generator);
  return chained_solve(problem, trivial_plan(problem.grid.horizon(), problem.generator.kappa, q), ctx, options);
}

}  // namespace bsdej
