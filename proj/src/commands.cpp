#include "bsdej/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "bsdej/serialize.hpp"

namespace bsdej {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json make_header(const std::string& command, const RunConfig& cfg, const fs::path& out_dir) {
  return json{{"schema", kReportSchema}, {"tool", "bsdej"},         {"version", kToolVersion},
              {"command", command},      {"timestamp", utc_timestamp()}, {"threads", cfg.threads},
              {"output_dir", out_dir.string()}};
}

json common_body(const RunConfig& cfg) {
  return json{{"config", cfg.resolved()},
              {"fingerprint", cfg.problem.fingerprint()},
              {"method", to_string(cfg.method)},
              {"grid", to_json(cfg.problem.grid)},
              {"seed", cfg.seed}};
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
}

void append_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
  out << text;
}

fs::path prepare(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir / name;
}

json norm_records(const Solution& sol, const BSDEProblem& problem, const PathSetOptions& options) {
  const PathSet paths = make_path_set(sol, options);
  const SolutionSample s = sample_solution(sol, problem, paths);
  const double p = std::max(1.0, problem.generator.p);
  auto record = [&](const std::string& norm, double pp, double value) {
    return to_json(NormReport{norm, pp, value, paths.estimator, paths.n_paths, paths.seed});
  };
  json out = json::array();
  out.push_back(record("S^p(Y)", p, sp_norm(s.y, p)));
  if (sol.dim() > 0) out.push_back(record("M^p(Z)", p, mp_norm(s.z, p)));
  if (sol.n_marks() > 0) out.push_back(record("L^p(V)", p, lp_field_norm(s.v, p)));
  out.push_back(record("D(Y)", 1.0, class_d_norm(s.y, StoppingFamily::default_for(s.y)).value));
  return out;
}

struct Stage {
  std::string name;
  const PicardTrace* trace;
};

std::string picard_csv(const std::vector<Stage>& stages) {
  std::ostringstream csv;
  csv << "stage,interval_start,interval_length,q,n,dist_y,dist_z,dist_v,dist_total,ratio\n";
  for (const auto& st : stages) {
    const PicardTrace& t = *st.trace;
    for (std::size_t n = 0; n < t.dist.size(); ++n) {
      const auto& d = t.dist[n];
      const bool has_ratio = n < t.ratio.size() && t.ratio[n].has_value();
      csv << st.name << ',' << fmt(t.interval_start) << ',' << fmt(t.interval_length) << ',' << fmt(t.q) << ',' << n
          << ',' << fmt(d.y) << ',' << fmt(d.z) << ',' << fmt(d.v) << ',' << fmt(d.total()) << ','
          << (has_ratio ? fmt(*t.ratio[n]) : std::string()) << '\n';
    }
  }
  return csv.str();
}

/// Result of the solve stage shared by all commands.
struct SolveRun {
  SolverContext ctx;
  std::optional<Solution> solution;
  std::optional<PicardTrace> pilot;
  std::vector<PicardTrace> traces;
  std::optional<SubdivisionPlan> plan;
  std::string status;  // direct | converged | diverged | not_converged
  std::string message;
  int exit_code = kExitOk;
};

SolveRun run_solve(const RunConfig& cfg) {
  SolveRun run;
  run.ctx = cfg.context();
  const BSDEProblem& problem = cfg.problem;
  if (!cfg.picard) {
    run.solution.emplace(solve(problem, run.ctx));
    run.status = "direct";
    return run;
  }
  const double kappa = problem.generator.kappa;
  const double horizon = problem.grid.horizon();
  const double q = cfg.picard_options.q ? *cfg.picard_options.q : picard_norm_index(problem.generator);

  PicardResult result = [&] {
    if (cfg.subdivision.mode == "fixed") {
      run.plan = snap_to_grid(subdivide_horizon(horizon, kappa, q, *cfg.subdivision.c_emp, cfg.subdivision.safety),
                              problem.grid);
      return chained_solve(problem, *run.plan, run.ctx, cfg.picard_options);
    }
    return picard_solve(problem, run.ctx, cfg.picard_options);
  }();

  if (result.diverged && cfg.subdivision.mode == "auto") {
    run.pilot = result.traces.front();
    const double c_emp = cfg.subdivision.c_emp ? *cfg.subdivision.c_emp : calibrate_c_emp(*run.pilot, kappa, horizon);
    run.plan = snap_to_grid(subdivide_horizon(horizon, kappa, run.pilot->q, c_emp, cfg.subdivision.safety),
                            problem.grid);
    result = chained_solve(problem, *run.plan, run.ctx, cfg.picard_options);
  }

  run.traces = std::move(result.traces);
  run.message = result.message;
  if (result.converged) {
    run.status = "converged";
    run.solution.emplace(std::move(result.solution));
  } else {
    run.status = result.diverged ? "diverged" : "not_converged";
    run.exit_code = kExitDivergence;
  }
  return run;
}

std::vector<Stage> stages_of(const SolveRun& run) {
  std::vector<Stage> stages;
  if (run.pilot) stages.push_back({"pilot", &*run.pilot});
  const std::string name = run.plan ? "chained" : "picard";
  for (const auto& t : run.traces) stages.push_back({name, &t});
  return stages;
}

json solve_fields(const RunConfig& cfg, const SolveRun& run) {
  json traces = json::array();
  for (const auto& st : stages_of(run)) {
    json t = to_json(*st.trace);
    t["stage"] = st.name;
    traces.push_back(std::move(t));
  }
  json out{{"status", run.status},
           {"message", run.message},
           {"Y0", run.solution ? json(run.solution->y0()) : json(nullptr)},
           {"Y0_se", run.solution ? json(run.solution->y0_se()) : json(nullptr)},
           {"norms", run.solution ? norm_records(*run.solution, cfg.problem, cfg.paths) : json::array()},
           {"picard_trace", std::move(traces)},
           {"subdivision_plan", run.plan ? to_json(*run.plan) : json(nullptr)}};
  return out;
}

std::string solve_summary(const SolveRun& run) {
  std::ostringstream s;
  s << "status " << run.status;
  if (run.solution) s << " Y0 " << std::setprecision(10) << run.solution->y0();
  if (run.plan) s << " intervals " << run.plan->count();
  if (!run.solution && !run.message.empty()) s << "\n" << run.message;
  return s.str();
}

std::string estimate_row(const EstimateReport& r) {
  return fmt(r.lhs) + ',' + fmt(r.rhs_core) + ',' + (r.implied_constant ? fmt(*r.implied_constant) : std::string()) +
         ',' + (r.pass ? "true" : "false");
}

}  // namespace

fs::path resolve_output_dir(const RunConfig& config, const std::optional<std::string>& out) {
  if (out && !out->empty()) return *out;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

CommandResult cmd_solve(const RunConfig& cfg, const fs::path& out_dir) {
  const SolveRun run = run_solve(cfg);
  json body = common_body(cfg);
  body.update(solve_fields(cfg, run));
  body["ladder"] = nullptr;

  CommandResult result;
  result.exit_code = run.exit_code;
  result.report = json{{"header", make_header("solve", cfg, out_dir)}, {"body", std::move(body)}};
  const fs::path report_path = prepare(out_dir, cfg.prefix + ".solve.json");
  write_text(report_path, result.report.dump(2) + "\n");
  const fs::path csv_path = out_dir / (cfg.prefix + ".picard.csv");
  write_text(csv_path, picard_csv(stages_of(run)));
  result.files = {report_path, csv_path};
  result.summary = solve_summary(run);
  return result;
}

CommandResult cmd_verify(const RunConfig& cfg, const fs::path& out_dir) {
  const SolveRun run = run_solve(cfg);
  json body = common_body(cfg);
  body["solve"] = solve_fields(cfg, run);
  CommandResult result;
  const fs::path report_path = prepare(out_dir, cfg.prefix + ".verify.json");
  std::ostringstream summary;
  summary << solve_summary(run);

  if (!run.solution) {
    body["estimates"] = json::array();
    body["uniqueness"] = nullptr;
    body["suite"] = nullptr;
    body["pass"] = false;
    result.exit_code = run.exit_code;
  } else {
    bool pass = true;
    const EstimateOptions eopts{cfg.verify.ceiling, cfg.paths};
    const EstimateReport zv = verify_zv_estimate(*run.solution, cfg.problem, cfg.verify.p, eopts);
    const EstimateReport full = verify_full_estimate(*run.solution, cfg.problem, cfg.verify.p, eopts);
    pass = pass && zv.pass && full.pass;
    body["estimates"] = json::array({to_json(zv), to_json(full)});
    std::string log = to_json(zv).dump() + "\n" + to_json(full).dump() + "\n";
    summary << "\nzv estimate " << (zv.pass ? "pass" : "FAIL") << ", full estimate " << (full.pass ? "pass" : "FAIL");

    if (cfg.verify.uniqueness) {
      const auto& d = cfg.verify.perturbation;
      std::vector<Perturbation> perts{{"zero", 0.0, 0.0, 0.0, std::nullopt}, {"perturbed", d[0], d[1], d[2], std::nullopt}};
      if (cfg.verify.alternate_degree && cfg.method == Method::mc) {
        perts.push_back({"alternate_basis", 0.0, 0.0, 0.0, BasisConfig{*cfg.verify.alternate_degree, cfg.basis.jump_degree}});
      }
      const UniquenessReport u =
          uniqueness_experiment(cfg.problem, run.ctx, perts, cfg.picard_options, run.plan ? &*run.plan : nullptr);
      body["uniqueness"] = to_json(u);
      pass = pass && u.pass;
      summary << ", uniqueness " << (u.pass ? "pass" : (u.inconclusive ? "INCONCLUSIVE" : "FAIL"));
    } else {
      body["uniqueness"] = nullptr;
    }

    if (cfg.verify.suite == "ci") {
      const CiSuiteReport suite = run_ci_suite(eopts, cfg.threads);
      std::ostringstream csv;
      csv << "name,generator,horizon,p,y0,zv_lhs,zv_rhs_core,zv_implied_constant,zv_pass,full_lhs,full_rhs_core,"
             "full_implied_constant,full_pass\n";
      json rows = json::array();
      bool suite_pass = suite.all_finite;
      for (const auto& row : suite.rows) {
        csv << row.name << ',' << row.generator << ',' << fmt(row.horizon) << ',' << fmt(row.p) << ',' << fmt(row.y0)
            << ',' << estimate_row(row.zv) << ',' << estimate_row(row.full) << '\n';
        rows.push_back({{"name", row.name}, {"y0", row.y0}, {"zv", to_json(row.zv)}, {"full", to_json(row.full)}});
        suite_pass = suite_pass && row.zv.pass && row.full.pass;
        for (const EstimateReport* r : {&row.zv, &row.full}) {
          json line = to_json(*r);
          line["instance"] = row.name;
          log += line.dump() + "\n";
        }
      }
      const bool within = ci_within_baseline(suite.max_implied_constant, kCiSuiteBaseline);
      suite_pass = suite_pass && within;
      const fs::path csv_path = out_dir / (cfg.prefix + ".suite.csv");
      write_text(csv_path, csv.str());
      result.files.push_back(csv_path);
      body["suite"] = json{{"rows", std::move(rows)},
                           {"max_implied_constant", suite.max_implied_constant},
                           {"baseline", kCiSuiteBaseline},
                           {"within_baseline", within},
                           {"all_finite", suite.all_finite},
                           {"pass", suite_pass}};
      pass = pass && suite_pass;
      summary << ", ci suite " << (suite_pass ? "pass" : "FAIL") << " (max implied constant "
              << std::setprecision(6) << suite.max_implied_constant << ")";
    } else {
      body["suite"] = nullptr;
    }
    body["pass"] = pass;
    result.exit_code = pass ? kExitOk : kExitVerifyFailed;
    const fs::path log_path = out_dir / (cfg.prefix + ".estimates.jsonl");
    append_text(log_path, log);
    result.files.push_back(log_path);
  }
  result.report = json{{"header", make_header("verify", cfg, out_dir)}, {"body", std::move(body)}};
  write_text(report_path, result.report.dump(2) + "\n");
  result.files.insert(result.files.begin(), report_path);
  result.summary = summary.str();
  return result;
}

CommandResult cmd_ladder(const RunConfig& cfg, const fs::path& out_dir) {
  if (cfg.ladder.n_list.empty()) {
    throw ConfigError("ladder.n_list", 0, "config error: ladder.n_list: required by the ladder command");
  }
  const SolverContext ctx = cfg.context();
  const LadderReport ladder = truncation_ladder_solve(cfg.problem, ctx, cfg.ladder);

  json body = common_body(cfg);
  body["ladder"] = to_json(ladder);
  CommandResult result;
  result.report = json{{"header", make_header("ladder", cfg, out_dir)}, {"body", std::move(body)}};
  const fs::path report_path = prepare(out_dir, cfg.prefix + ".ladder.json");
  write_text(report_path, result.report.dump(2) + "\n");

  std::ostringstream csv;
  csv << "n,y0,y0_se,next_n,distance,distance_se,tail_bound,tail_bound_se\n";
  for (std::size_t i = 0; i < ladder.rungs.size(); ++i) {
    const auto& r = ladder.rungs[i];
    csv << fmt(r.n) << ',' << fmt(r.y0) << ',' << fmt(r.y0_se);
    const LadderPair* next = nullptr;
    if (i + 1 < ladder.rungs.size()) {
      for (const auto& p : ladder.pairs) {
        if (p.n == r.n && p.m == ladder.rungs[i + 1].n) next = &p;
      }
    }
    if (next) {
      csv << ',' << fmt(next->m) << ',' << fmt(next->distance) << ',' << fmt(next->distance_se) << ','
          << fmt(next->bound) << ',' << fmt(next->bound_se) << '\n';
    } else {
      csv << ",,,,,\n";
    }
  }
  const fs::path csv_path = out_dir / (cfg.prefix + ".ladder.csv");
  write_text(csv_path, csv.str());
  result.files = {report_path, csv_path};
  std::ostringstream summary;
  summary << "ladder " << ladder.rungs.size() << " rungs, top Y0 " << std::setprecision(10)
          << (ladder.rungs.empty() ? 0.0 : ladder.rungs.back().y0) << (ladder.cauchy ? ", cauchy" : "");
  result.summary = summary.str();
  return result;
}

int run_command(const CommandLine& cli, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_run_config(cli.config_path, cli.seed);
    const fs::path dir = resolve_output_dir(cfg, cli.out);
    CommandResult result;
    if (cli.command == "solve") result = cmd_solve(cfg, dir);
    else if (cli.command == "verify") result = cmd_verify(cfg, dir);
    else if (cli.command == "ladder") result = cmd_ladder(cfg, dir);
    else {
      err << "error: unknown command '" << cli.command << "'\n";
      return kExitError;
    }
    (result.exit_code == kExitOk ? out : err) << result.summary << '\n';
    for (const auto& f : result.files) out << "wrote " << f.string() << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
  } catch (const StepSizeError& e) {
    err << "step size error: " << e.what() << '\n';
  } catch (const ConditioningError& e) {
    err << "conditioning error: " << e.what() << '\n';
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
  } catch (const ResourceLimit& e) {
    err << "resource limit: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

std::string report_body_text(const json& report) { return report.at("body").dump(2); }

}  // namespace bsdej
