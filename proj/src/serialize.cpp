#include "bsdej/serialize.hpp"

#include "bsdej/errors.hpp"

namespace bsdej {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

json to_json(const TimeGrid& grid) {
  return json{{"horizon", grid.horizon()}, {"steps", grid.steps()}, {"dt", grid.dt()}};
}

json to_json(const MarkSpace& marks) {
  json out = json::array();
  for (int i = 0; i < marks.size(); ++i) {
    const auto m = marks.mark(i);
    out.push_back({{"mark", std::vector<double>(m.begin(), m.end())}, {"intensity", marks.intensity(i)}});
  }
  return out;
}

json to_json(const PathBatch& batch) {
  json jumps = json::array();
  for (int p = 0; p < batch.n_paths(); ++p) {
    json path = json::array();
    for (const auto& ev : batch.jumps(p)) path.push_back({{"time", ev.time}, {"mark", ev.mark}, {"step", ev.step}});
    jumps.push_back(std::move(path));
  }
  const auto inc = batch.increments();
  return json{{"grid", to_json(batch.grid())},
              {"dim", batch.dim()},
              {"n_paths", batch.n_paths()},
              {"seed", batch.seed()},
              {"increments", std::vector<double>(inc.begin(), inc.end())},
              {"marks", batch.has_jumps() ? to_json(batch.marks()) : json(nullptr)},
              {"jumps", std::move(jumps)}};
}

PathBatch path_batch_from_json(const json& j) {
  try {
    const TimeGrid grid(j.at("grid").at("horizon").get<double>(), j.at("grid").at("steps").get<int>());
    std::optional<MarkSpace> marks;
    if (!j.at("marks").is_null()) {
      std::vector<std::vector<double>> vectors;
      std::vector<double> rates;
      for (const auto& m : j.at("marks")) {
        vectors.push_back(m.at("mark").get<std::vector<double>>());
        rates.push_back(m.at("intensity").get<double>());
      }
      marks.emplace(std::move(vectors), std::move(rates));
    }
    std::vector<std::vector<JumpEvent>> jumps;
    for (const auto& path : j.at("jumps")) {
      std::vector<JumpEvent> events;
      for (const auto& ev : path) {
        events.push_back(JumpEvent{ev.at("time").get<double>(), ev.at("mark").get<int>(), ev.at("step").get<int>()});
      }
      jumps.push_back(std::move(events));
    }
    return PathBatch(grid, j.at("dim").get<int>(), j.at("n_paths").get<int>(), j.at("seed").get<std::uint64_t>(),
                     j.at("increments").get<std::vector<double>>(), std::move(marks), std::move(jumps));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("path batch JSON: ") + e.what());
  }
}

json to_json(const ScenarioTree& tree) {
  std::vector<double> jump_probs;
  for (int j = 0; j <= tree.n_marks(); ++j) jump_probs.push_back(tree.jump_probability(j));
  json layers = json::array();
  for (int k = 0; k <= tree.depth(); ++k) {
    const std::size_t n = tree.layer_size(k);
    std::vector<double> brownian;
    std::vector<int> counts;
    std::vector<std::size_t> children;
    brownian.reserve(n * tree.dim());
    counts.reserve(n * tree.n_marks());
    for (std::size_t node = 0; node < n; ++node) {
      const StateView s = tree.state(k, node);
      brownian.insert(brownian.end(), s.brownian.begin(), s.brownian.end());
      counts.insert(counts.end(), s.jump_counts.begin(), s.jump_counts.end());
      if (k < tree.depth()) {
        for (int b = 0; b < tree.branching(); ++b) children.push_back(tree.child(k, node, b));
      }
    }
    const auto prob = tree.layer_probabilities(k);
    layers.push_back({{"probability", std::vector<double>(prob.begin(), prob.end())},
                      {"brownian", std::move(brownian)},
                      {"jump_counts", std::move(counts)},
                      {"children", std::move(children)}});
  }
  return json{{"grid", to_json(tree.grid())},
              {"marks", to_json(tree.marks())},
              {"dim", tree.dim()},
              {"recombining", tree.recombining()},
              {"branching", tree.branching()},
              {"jump_probabilities", jump_probs},
              {"layers", std::move(layers)}};
}

json to_json(const IntegralResult& result) {
  return json{{"grid", to_json(result.grid)},
              {"n_paths", result.n_paths},
              {"terminal_values", result.terminal_values()},
              {"terminal_qv", result.terminal_qv()}};
}

json to_json(const NormReport& report) {
  return json{{"norm", report.norm},       {"p", report.p},           {"value", report.value},
              {"estimator", report.estimator}, {"n_paths", report.n_paths}, {"seed", report.seed}};
}

json to_json(const PicardTrace& trace) {
  json rows = json::array();
  for (std::size_t n = 0; n < trace.dist.size(); ++n) {
    const auto& d = trace.dist[n];
    rows.push_back({{"n", n},
                    {"y", d.y},
                    {"z", d.z},
                    {"v", d.v},
                    {"total", d.total()},
                    {"ratio", n < trace.ratio.size() ? optional_number(trace.ratio[n]) : json(nullptr)}});
  }
  return json{{"q", trace.q},
              {"interval_start", trace.interval_start},
              {"interval_length", trace.interval_length},
              {"iterations", trace.iterations},
              {"converged", trace.converged},
              {"diverged", trace.diverged},
              {"message", trace.message},
              {"distances", std::move(rows)}};
}

json to_json(const SubdivisionPlan& plan) {
  json intervals = json::array();
  for (const auto& c : plan.intervals) {
    intervals.push_back({{"start", c.start},
                         {"end", c.end},
                         {"q", c.q},
                         {"kappa", c.kappa},
                         {"c_emp", c.c_emp},
                         {"bound", c.bound},
                         {"certified", c.certified}});
  }
  return json{{"breakpoints", plan.breakpoints},
              {"nodes", plan.nodes},
              {"safety", plan.safety},
              {"requested", plan.requested},
              {"intervals", std::move(intervals)}};
}

json to_json(const LadderReport& report) {
  json rungs = json::array();
  for (const auto& r : report.rungs) rungs.push_back({{"n", r.n}, {"y0", r.y0}, {"y0_se", r.y0_se}});
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"n", p.n},
                     {"m", p.m},
                     {"distance", p.distance},
                     {"distance_se", p.distance_se},
                     {"best_rule", p.best_rule},
                     {"bound", p.bound},
                     {"bound_se", p.bound_se}});
  }
  return json{{"rungs", std::move(rungs)},
              {"pairs", std::move(pairs)},
              {"estimator", report.estimator},
              {"n_paths", report.n_paths},
              {"cauchy", report.cauchy}};
}

json to_json(const EstimateReport& report) {
  return json{{"kind", report.kind},
              {"lhs", report.lhs},
              {"rhs_core", report.rhs_core},
              {"implied_constant", optional_number(report.implied_constant)},
              {"p", report.p},
              {"kappa", report.kappa},
              {"horizon", report.horizon},
              {"fingerprint", report.fingerprint},
              {"estimator", report.estimator},
              {"n_paths", report.n_paths},
              {"ceiling", report.ceiling},
              {"anomalous", report.anomalous},
              {"pass", report.pass}};
}

json to_json(const UniquenessReport& report) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"a", p.a},
                     {"b", p.b},
                     {"distance", p.distance},
                     {"y0_difference", p.y0_difference},
                     {"combined_se", p.combined_se},
                     {"statistic", p.statistic},
                     {"threshold", p.threshold},
                     {"pass", p.pass}});
  }
  return json{{"labels", report.labels},
              {"y0", report.y0},
              {"y0_se", report.y0_se},
              {"pairs", std::move(pairs)},
              {"max_distance", report.max_distance},
              {"tol", report.tol},
              {"q", report.q},
              {"inconclusive", report.inconclusive},
              {"pass", report.pass},
              {"message", report.message}};
}

}  // namespace bsdej
