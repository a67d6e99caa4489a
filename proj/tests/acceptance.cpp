// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "bsdej/commands.hpp"
#include "bsdej/config.hpp"
#include "bsdej/errors.hpp"
#include "bsdej/estimates.hpp"
#include "bsdej/stochastic_integrals.hpp"
#include "problems.hpp"

using namespace bsdej;
using namespace bsdej::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

SolverContext tree_ctx(const BSDEProblem& p, bool recombine) {
  TreeOptions opts;
  opts.recombine = recombine;
  return make_tree_context(p, opts);
}

// Compensated integral identities on 1e5 paths.
void integral_identities(Outcome& o) {
  const TimeGrid g(1.0, 8);
  const MarkSpace marks({{1.0}, {-0.5}}, {1.0, 2.0});
  const int n = 100000;
  const PathBatch b = simulate_poisson_measure(g, marks, n, 20240101);
  std::vector<double> v(static_cast<std::size_t>(n) * 8 * 2), w(v.size()), c(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>((i * 7) % 13) * 0.5 - 3.0;
    w[i] = static_cast<double>((i * 5) % 11) * 0.25;
    c[i] = 0.5 * v[i] - 2.0 * w[i];
  }
  const RandomField fv(g, marks, n, v), fw(g, marks, n, w), fc(g, marks, n, c);
  const IntegralResult rv = poisson_integral_compensated(fv, b);
  const IntegralResult rw = poisson_integral_compensated(fw, b);
  const IntegralResult rc = poisson_integral_compensated(fc, b);

  const std::vector<double> qv = quadratic_variation(fv, b);
  int qv_bad = 0;
  for (int p = 0; p < n; ++p) {
    double sum = 0.0;
    for (const auto& ev : b.jumps(p)) sum += fv(p, ev.step, ev.mark) * fv(p, ev.step, ev.mark);
    if (rv.qv(p, 8) != sum || qv[static_cast<std::size_t>(p) * 9 + 8] != sum) ++qv_bad;
  }
  const JumpIdentityReport jr = jump_identity_check(fv, rv, b);

  const std::vector<double> t = rv.terminal_values();
  const double mean = std::accumulate(t.begin(), t.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : t) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (n - 1) / n);

  int lin_bad = 0;
  for (std::size_t i = 0; i < rc.node_values.size(); ++i) {
    if (rc.node_values[i] != 0.5 * rv.node_values[i] - 2.0 * rw.node_values[i]) ++lin_bad;
  }
  o.detail << "qv mismatches " << qv_bad << ", jump identity failures " << jr.failing_paths << ", mean " << mean
           << " (4 SE = " << 4.0 * se << "), linearity mismatches " << lin_bad << " ";
  o.require(qv_bad == 0, "qv identity exact");
  o.require(jr.pass, "jump identity");
  o.require(std::abs(mean) <= 4.0 * se, "|mean| <= 4 SE");
  o.require(lin_bad == 0, "linearity exact");
}

void ode_oracle(Outcome& o) {
  auto y0 = [](int n) {
    const auto p = problem(1.0, n, linear_y(0.5), constant_terminal(1.0));
    return solve(p, tree_ctx(p, true)).y0();
  };
  const double exact = std::exp(0.5);
  const double e100 = std::abs(y0(100) - exact), e200 = std::abs(y0(200) - exact);
  o.detail << "rel err N=100 " << e100 / exact << ", ratio " << e100 / e200 << " ";
  o.require(e100 / exact < 0.01, "within 1%");
  o.require(e100 / e200 >= 1.7 && e100 / e200 <= 2.3, "ratio in [1.7, 2.3]");
}

void martingale_representation(Outcome& o) {
  {
    // sqrt(dt) = 1/4 keeps every node value and difference exact.
    const auto p = problem(1.0, 16, zero_driver(), brownian_linear());
    const Solution s = solve(p, tree_ctx(p, true));
    int bad = 0;
    for (int k = 0; k < 16; ++k) {
      for (std::size_t i = 0; i < s.slots(k); ++i) {
        if (s.z(k, i)[0] != 1.0 || s.v(k, i)[0] != 0.0) ++bad;
      }
    }
    o.detail << "Z/V mismatches " << bad << ", ";
    o.require(bad == 0, "Z == 1 and V == 0 exactly");
  }
  const MarkSpace marks = one_mark(2.0);
  double v_dev = 0.0;
  auto bias = [&](int n) {
    const auto p = problem(1.0, n, zero_driver(marks), compensated_count(marks, 1.0), marks);
    const Solution s = solve(p, tree_ctx(p, true));
    for (int k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < s.slots(k); ++i) v_dev = std::max(v_dev, std::abs(s.v(k, i)[0] - 1.0));
    }
    return std::abs(s.y0());
  };
  const double b16 = bias(16), b32 = bias(32);
  const double dt = 1.0 / 16.0;
  o.detail << "max |V-1| " << v_dev << ", Y0 bias " << b16 << " -> " << b32 << " (ratio " << b16 / b32 << ")";
  o.require(v_dev <= 2.0 * 2.0 * dt * dt, "V within O(dt^2)");
  o.require(b16 / b32 >= 1.7 && b16 / b32 <= 2.3, "first-order bias decay");
}

void mc_vs_tree(Outcome& o) {
  const MarkSpace marks = one_mark(0.1);
  const auto xi = sum_terminal({brownian_terminal(BrownianShape::square, 1.0, 1.0, 0.0),
                                jump_count_terminal({1.0}, 1.0, false, 0.0, marks, 1.0)});
  const auto p = problem(1.0, 2, affine_generator(0.5, 0.2, 0.1, 0.0, 0.0, marks, 1, 2.0), xi, marks);
  const double tree_y0 = solve(p, tree_ctx(p, false)).y0();
  const Solution mc = solve(p, make_mc_context(p, 10000, 11, BasisConfig{2, 1}));
  const double z = std::abs(mc.y0() - tree_y0) / mc.y0_se();
  o.detail << "tree " << tree_y0 << ", mc " << mc.y0() << " +- " << mc.y0_se() << " (" << z << " SE)";
  o.require(mc.y0_se() > 0.0 && z <= 3.0, "within 3 SE");
}

void picard_contraction(Outcome& o) {
  const MarkSpace marks = one_mark();
  {
    const auto p = problem(1.0, 8, zv_coupled_generator(0.5, 0.0, 0.0, marks, 1, 2.0), sin_plus_jumps(marks, 1.0));
    const PicardResult r = picard_solve(p, tree_ctx(p, true), PicardOptions{.tol = 1e-12});
    const auto& t = r.traces[0];
    double rate = 0.0;
    for (std::size_t n = 1; n < t.ratio.size(); ++n) {
      if (t.ratio[n]) rate = std::max(rate, *t.ratio[n]);
    }
    bool envelope = r.converged && rate < 1.0;
    for (std::size_t n = 1; n < t.dist.size(); ++n) {
      envelope = envelope && t.total(n) <= 1.5 * t.total(1) * std::pow(rate, static_cast<double>(n) - 1.0);
    }
    o.detail << "short horizon r " << rate << " over " << t.iterations << " iterations, ";
    o.require(envelope, "geometric envelope");
  }
  const auto p = problem(10.0, 100, zv_coupled_generator(3.0, 0.0, 0.0, marks, 1, 2.0), sin_plus_jumps(marks, 10.0));
  const SolverContext ctx = tree_ctx(p, true);
  const PicardOptions opts{.tol = 1e-10, .max_iter = 60};
  const PicardResult single = picard_solve(p, ctx, opts);
  o.require(single.diverged && !single.message.empty(), "divergence report");
  if (!single.diverged) return;
  const PicardTrace& pilot = single.traces[0];
  const double c_emp = calibrate_c_emp(pilot, p.generator.kappa, 10.0);
  const SubdivisionPlan plan = snap_to_grid(subdivide_horizon(10.0, p.generator.kappa, pilot.q, c_emp, 0.5), p.grid);
  const PicardResult chained = chained_solve(p, plan, ctx, opts);
  o.detail << "long horizon diverged, " << plan.count() << " intervals, chained Y0 "
           << (chained.converged ? std::to_string(chained.solution.y0()) : "n/a");
  o.require(chained.converged, "chained solve converges");
}

void truncation_ladder(Outcome& o) {
  const auto p = problem(1.0, 64, zero_driver(), brownian_terminal(BrownianShape::exp, 1.0, 1.0, 0.0));
  const LadderReport r =
      truncation_ladder_solve(p, tree_ctx(p, true), LadderOptions{{1.0, 2.0, 4.0, 8.0, 16.0, 32.0}, 1e-3});
  int bad = 0;
  for (const auto& pair : r.pairs) {
    if (!(pair.distance <= lognormal_tail_mean(pair.n) + 3.0 * pair.distance_se)) ++bad;
  }
  bool increasing = true;
  for (std::size_t i = 1; i < r.rungs.size(); ++i) increasing = increasing && r.rungs[i].y0 > r.rungs[i - 1].y0;
  const double top = r.rungs.back().y0;
  const double rel = std::abs(top - std::exp(0.5)) / std::exp(0.5);
  o.detail << r.pairs.size() << " pairs, " << bad << " above tail bound, top Y0 " << top << " (rel " << rel << ")";
  o.require(bad == 0, "distance <= tail + 3 SE");
  o.require(increasing, "Y0 increasing");
  o.require(rel <= 0.02, "top rung within 2%");
}

void uniqueness(Outcome& o) {
  const MarkSpace marks = one_mark();
  const PicardOptions opts{.tol = 1e-10};
  const std::vector<Perturbation> inits{{"zero", 0, 0, 0, {}}, {"perturbed", 10, 1, 1, {}}};
  double worst = 0.0;
  bool ok = true;
  for (const auto& f : {affine_generator(0.0, 0.25, 0.0, 0.0, 0.0, marks, 1, 2.0),
                        zv_coupled_generator(0.25, 0.1, 0.1, marks, 1, 2.0),
                        lipschitz_smooth_generator(0.5, 0.2, 0.1, 0.1, marks, 1, 2.0)}) {
    const auto p = problem(1.0, 8, f, sin_plus_jumps(marks, 1.0));
    const UniquenessReport r = uniqueness_experiment(p, tree_ctx(p, true), inits, opts);
    ok = ok && !r.inconclusive && r.max_distance <= 2.0 * opts.tol;
    worst = std::max(worst, r.max_distance);
  }
  const auto dec = problem(1.0, 8, linear_y(0.5), sin_plus_jumps(marks, 1.0));
  const UniquenessReport d = uniqueness_experiment(dec, tree_ctx(dec, true), inits, opts);
  o.detail << "max S^q distance " << worst << " (2 tol = " << 2.0 * opts.tol << "), decoupled " << d.max_distance;
  o.require(ok, "within 2 tol");
  o.require(!d.inconclusive && d.max_distance == 0.0, "decoupled exact");
}

void a_priori_estimates(Outcome& o) {
  const CiSuiteReport suite = run_ci_suite();
  o.detail << suite.rows.size() << " suite rows, max implied " << suite.max_implied_constant << ", ";
  o.require(suite.rows.size() == 12 && suite.all_finite, "12 finite implied constants");

  const auto c = problem(1.0, 4, zero_driver(), constant_terminal(3.0));
  const Solution sc = solve(c, tree_ctx(c, false));
  const EstimateReport full = verify_full_estimate(sc, c, 2.0);
  const EstimateReport zv = verify_zv_estimate(sc, c, 2.0);
  o.require(full.implied_constant && *full.implied_constant == 1.0, "constant instance implied == 1");
  o.require(zv.lhs == 0.0 && zv.implied_constant && *zv.implied_constant == 0.0 && zv.pass, "lhs = 0 instance");

  const MarkSpace marks = one_mark(1.5);
  const auto f = affine_generator(0.4, 0.3, 0.2, 0.0, 0.0, marks, 1, 2.0);
  const auto xi = sin_plus_jumps(marks, 1.0);
  TerminalSpec twice;
  twice.xi = [xi](const StateView& s) { return 2.0 * xi(s); };
  twice.description = "2*" + xi.description;
  const auto p1 = problem(1.0, 6, f, xi, marks), p2 = problem(1.0, 6, f, twice, marks);
  const Solution a = solve(p1, tree_ctx(p1, false)), b = solve(p2, tree_ctx(p2, false));
  bool covariant = true;
  for (auto fn : {&verify_zv_estimate, &verify_full_estimate}) {
    const EstimateReport ra = fn(a, p1, 2.0, {}), rb = fn(b, p2, 2.0, {});
    covariant = covariant && ra.implied_constant && rb.implied_constant && *ra.implied_constant == *rb.implied_constant;
  }
  o.detail << "constant instance " << *full.implied_constant << ", zero-lhs instance " << *zv.implied_constant
           << ", scale covariance " << (covariant ? "bit-exact" : "broken");
  o.require(covariant, "scale covariance bit-exact");
}

void reproducibility(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "bsdej_acceptance";
  fs::remove_all(root);
  const nlohmann::json base = nlohmann::json::parse(R"({
    "schema": "bsdej-config/1",
    "problem": {
      "horizon": 1.0, "steps": 10,
      "marks": [{"mark": [1.0], "intensity": 1.0}],
      "generator": {"form": "lipschitz_smooth", "a": 0.5, "b": 0.2, "c": 0.1, "constant": 0.1},
      "terminal": {"form": "sum", "terms": [
        {"form": "brownian", "shape": "sin"},
        {"form": "jump_count", "weights": [1.0], "scale": 0.5, "compensated": true}]}
    },
    "method": {"kind": "mc", "n_paths": 4000},
    "ladder": {"n_list": [0.5, 1.0, 2.0]},
    "paths": {"n_sample": 2000, "enumerate_cap": 4096},
    "seed": 17
  })");
  int checked = 0, mismatched = 0;
  for (const auto& cmd : {std::string("solve"), std::string("verify"), std::string("ladder")}) {
    for (const char* kind : {"mc", "tree"}) {
      nlohmann::json cfg_json = base;
      cfg_json["method"]["kind"] = kind;
      RunConfig cfg = parse_run_config(cfg_json.dump());
      const fs::path d1 = root / (cmd + kind + "1"), d2 = root / (cmd + kind + "2");
      fs::create_directories(d1);
      fs::create_directories(d2);
      auto run = [&](const RunConfig& c, const fs::path& d) {
        return cmd == "solve" ? cmd_solve(c, d) : cmd == "verify" ? cmd_verify(c, d) : cmd_ladder(c, d);
      };
      cfg.threads = 1;
      const CommandResult first = run(cfg, d1);
      RunConfig again = parse_run_config(first.report.dump());
      again.threads = 4;
      const CommandResult second = run(again, d2);
      ++checked;
      if (report_body_text(first.report) != report_body_text(second.report)) {
        ++mismatched;
        o.detail << "[" << cmd << "/" << kind << " differs] ";
      }
    }
  }
  fs::remove_all(root);
  o.detail << checked << " reports re-run from embedded config at 4 threads, " << mismatched << " differ";
  o.require(mismatched == 0, "byte-identical bodies");
}

struct Criterion {
  const char* name;
  double limit_s;  // 0: no runtime limit
  std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"compensated integral identities", 30, integral_identities},
      {"tree solver ODE oracle", 10, ode_oracle},
      {"martingale representation exactness", 0, martingale_representation},
      {"regression vs tree on matched instance", 10, mc_vs_tree},
      {"Picard contraction and subdivision", 60, picard_contraction},
      {"truncation ladder tail bound", 60, truncation_ladder},
      {"uniqueness across initializations", 30, uniqueness},
      {"a priori estimates", 120, a_priori_estimates},
      {"report reproducibility", 0, reproducibility},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "[exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail << " [runtime limit " << c.limit_s << " s exceeded]";
    }
    if (!o.pass) ++failures;
    std::printf("%s %d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
