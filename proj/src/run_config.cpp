#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bsdej/config.hpp"
#include "config_reader.hpp"

namespace bsdej {

using nlohmann::json;
using detail::Reader;

namespace {

int parse_error_line(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = parse_error_line(text, e.byte);
    throw ConfigError("", line, "config error at line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  // A report embeds its resolved config under body.config.
  if (doc.is_object() && doc.contains("header") && doc.contains("body") && doc["body"].is_object() &&
      doc["body"].contains("config")) {
    doc = doc["body"]["config"];
  }
  const Reader root(doc, {}, text);
  root.allow_only({"schema", "problem", "method", "seed", "picard", "subdivision", "verify", "ladder", "paths",
                   "output", "execution"});
  const std::string schema = root.string("schema");
  if (schema != kConfigSchema) root.fail("schema", "expected \"" + std::string(kConfigSchema) + "\"");

  json problem_json;
  RunConfig cfg(problem_from_json(root.child("problem").node(), text, &problem_json));
  cfg.problem_json = std::move(problem_json);

  const long long seed = root.integer("seed", 1);
  if (seed < 0) root.fail("seed", "must be non-negative");
  cfg.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(seed);

  const Reader method = root.child_or_empty("method");
  method.allow_only({"kind", "recombine", "node_cap", "n_paths", "basis_degree", "jump_degree", "fixpoint_rtol",
                     "fixpoint_max_iter"});
  const std::string kind = method.string("kind", "tree");
  if (kind == "tree") cfg.method = Method::tree;
  else if (kind == "mc") cfg.method = Method::mc;
  else method.fail("kind", "expected \"tree\" or \"mc\"");
  cfg.recombine = method.boolean("recombine", true);
  const long long node_cap = method.integer("node_cap", 10'000'000);
  if (node_cap < 1) method.fail("node_cap", "must be >= 1");
  cfg.node_cap = static_cast<std::size_t>(node_cap);
  const long long n_paths = method.integer("n_paths", 10000);
  if (n_paths < 1 || n_paths > 100'000'000) method.fail("n_paths", "must lie in [1, 1e8]");
  cfg.n_paths = static_cast<int>(n_paths);
  const long long degree = method.integer("basis_degree", 2);
  if (degree < 0 || degree > 8) method.fail("basis_degree", "must lie in [0, 8]");
  const long long jump_degree = method.integer("jump_degree", 1);
  if (jump_degree < 0 || jump_degree > 8) method.fail("jump_degree", "must lie in [0, 8]");
  cfg.basis = BasisConfig{static_cast<int>(degree), static_cast<int>(jump_degree)};
  cfg.fixpoint.rtol = method.number("fixpoint_rtol", 1e-14);
  if (!(cfg.fixpoint.rtol > 0.0)) method.fail("fixpoint_rtol", "must be positive");
  const long long fp_iter = method.integer("fixpoint_max_iter", 500);
  if (fp_iter < 1) method.fail("fixpoint_max_iter", "must be >= 1");
  cfg.fixpoint.max_iter = static_cast<int>(fp_iter);

  const Reader picard = root.child_or_empty("picard");
  picard.allow_only({"enabled", "tol", "max_iter", "q", "init", "divergence_window"});
  cfg.picard = picard.boolean("enabled", true);
  cfg.picard_options.tol = picard.number("tol", 1e-10);
  if (!(cfg.picard_options.tol > 0.0)) picard.fail("tol", "must be positive");
  const long long max_iter = picard.integer("max_iter", 200);
  if (max_iter < 1) picard.fail("max_iter", "must be >= 1");
  cfg.picard_options.max_iter = static_cast<int>(max_iter);
  cfg.picard_options.q = picard.optional_number("q");
  if (cfg.picard_options.q && !(*cfg.picard_options.q > 1.0 && *cfg.picard_options.q < 2.0)) {
    picard.fail("q", "must lie in (1, 2)");
  }
  const auto init = picard.numbers("init", {0.0, 0.0, 0.0});
  if (init.size() != 3) picard.fail("init", "expected [y, z, v]");
  cfg.picard_options.init_y = init[0];
  cfg.picard_options.init_z = init[1];
  cfg.picard_options.init_v = init[2];
  const long long window = picard.integer("divergence_window", 3);
  if (window < 1) picard.fail("divergence_window", "must be >= 1");
  cfg.picard_options.divergence_window = static_cast<int>(window);

  const Reader sub = root.child_or_empty("subdivision");
  sub.allow_only({"mode", "safety", "c_emp"});
  cfg.subdivision.mode = sub.string("mode", "none");
  if (cfg.subdivision.mode != "none" && cfg.subdivision.mode != "auto" && cfg.subdivision.mode != "fixed") {
    sub.fail("mode", "expected \"none\", \"auto\" or \"fixed\"");
  }
  cfg.subdivision.safety = sub.number("safety", 0.5);
  if (!(cfg.subdivision.safety > 0.0 && cfg.subdivision.safety < 1.0)) sub.fail("safety", "must lie in (0, 1)");
  cfg.subdivision.c_emp = sub.optional_number("c_emp");
  if (cfg.subdivision.c_emp && !(*cfg.subdivision.c_emp > 0.0)) sub.fail("c_emp", "must be positive");
  if (cfg.subdivision.mode == "fixed" && !cfg.subdivision.c_emp) sub.fail("c_emp", "required when mode is \"fixed\"");

  const Reader verify = root.child_or_empty("verify");
  verify.allow_only({"p", "ceiling", "uniqueness", "perturbation", "alternate_degree", "suite"});
  cfg.verify.p = verify.number("p", 2.0);
  if (!(cfg.verify.p > 1.0)) verify.fail("p", "must exceed 1");
  cfg.verify.ceiling = verify.number("ceiling", 1e3);
  if (!(cfg.verify.ceiling > 0.0)) verify.fail("ceiling", "must be positive");
  cfg.verify.uniqueness = verify.boolean("uniqueness", true);
  cfg.verify.perturbation = verify.numbers("perturbation", {10.0, 1.0, 1.0});
  if (cfg.verify.perturbation.size() != 3) verify.fail("perturbation", "expected [y, z, v]");
  if (verify.has("alternate_degree")) {
    const long long alt = verify.integer("alternate_degree");
    if (alt < 0 || alt > 8) verify.fail("alternate_degree", "must lie in [0, 8]");
    cfg.verify.alternate_degree = static_cast<int>(alt);
  }
  cfg.verify.suite = verify.string("suite", "none");
  if (cfg.verify.suite != "none" && cfg.verify.suite != "ci") verify.fail("suite", "expected \"none\" or \"ci\"");

  const Reader ladder = root.child_or_empty("ladder");
  ladder.allow_only({"n_list", "tol"});
  cfg.ladder.n_list = ladder.numbers("n_list", {});
  for (std::size_t i = 0; i < cfg.ladder.n_list.size(); ++i) {
    if (!(cfg.ladder.n_list[i] > 0.0)) ladder.fail("n_list", "entries must be positive");
    if (i > 0 && !(cfg.ladder.n_list[i] > cfg.ladder.n_list[i - 1])) {
      ladder.fail("n_list", "must be strictly increasing");
    }
  }
  cfg.ladder.tol = ladder.number("tol", 1e-3);
  if (!(cfg.ladder.tol > 0.0)) ladder.fail("tol", "must be positive");

  const Reader paths = root.child_or_empty("paths");
  paths.allow_only({"enumerate_cap", "n_sample", "seed"});
  const long long cap = paths.integer("enumerate_cap", 1 << 20);
  if (cap < 1) paths.fail("enumerate_cap", "must be >= 1");
  cfg.paths.enumerate_cap = static_cast<std::size_t>(cap);
  const long long n_sample = paths.integer("n_sample", 10000);
  if (n_sample < 2 || n_sample > 10'000'000) paths.fail("n_sample", "must lie in [2, 1e7]");
  cfg.paths.n_sample = static_cast<int>(n_sample);
  const long long path_seed = paths.integer("seed", static_cast<long long>(cfg.seed));
  if (path_seed < 0) paths.fail("seed", "must be non-negative");
  cfg.paths.seed = seed_override && !paths.has("seed") ? *seed_override : static_cast<std::uint64_t>(path_seed);

  const Reader output = root.child_or_empty("output");
  output.allow_only({"dir", "prefix"});
  cfg.output_dir = output.string("dir", "");
  cfg.prefix = output.string("prefix", "run");
  if (cfg.prefix.empty() || cfg.prefix.find('/') != std::string::npos) {
    output.fail("prefix", "must be a non-empty file name prefix");
  }

  const Reader exec = root.child_or_empty("execution");
  exec.allow_only({"threads"});
  const long long threads = exec.integer("threads", 1);
  if (threads < 1 || threads > 256) exec.fail("threads", "must lie in [1, 256]");
  cfg.threads = static_cast<int>(threads);
  return cfg;
}

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "config error: cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), seed_override);
}

json RunConfig::resolved() const {
  json method_json{{"kind", to_string(method)},
                   {"recombine", recombine},
                   {"node_cap", node_cap},
                   {"n_paths", n_paths},
                   {"basis_degree", basis.degree},
                   {"jump_degree", basis.jump_degree},
                   {"fixpoint_rtol", fixpoint.rtol},
                   {"fixpoint_max_iter", fixpoint.max_iter}};
  json picard_json{{"enabled", picard},
                   {"tol", picard_options.tol},
                   {"max_iter", picard_options.max_iter},
                   {"init", {picard_options.init_y, picard_options.init_z, picard_options.init_v}},
                   {"divergence_window", picard_options.divergence_window}};
  if (picard_options.q) picard_json["q"] = *picard_options.q;
  json sub_json{{"mode", subdivision.mode}, {"safety", subdivision.safety}};
  if (subdivision.c_emp) sub_json["c_emp"] = *subdivision.c_emp;
  json verify_json{{"p", verify.p},
                   {"ceiling", verify.ceiling},
                   {"uniqueness", verify.uniqueness},
                   {"perturbation", verify.perturbation},
                   {"suite", verify.suite}};
  if (verify.alternate_degree) verify_json["alternate_degree"] = *verify.alternate_degree;
  return json{{"schema", kConfigSchema},
              {"problem", problem_json},
              {"method", method_json},
              {"seed", seed},
              {"picard", picard_json},
              {"subdivision", sub_json},
              {"verify", verify_json},
              {"ladder", {{"n_list", ladder.n_list}, {"tol", ladder.tol}}},
              {"paths", {{"enumerate_cap", paths.enumerate_cap}, {"n_sample", paths.n_sample}, {"seed", paths.seed}}}};
}

SolverContext RunConfig::context() const {
  SolverContext ctx;
  if (method == Method::tree) {
    TreeOptions options;
    options.recombine = recombine;
    options.node_cap = node_cap;
    ctx = make_tree_context(problem, options);
  } else {
    ctx = make_mc_context(problem, n_paths, seed, basis, threads);
  }
  ctx.basis = basis;
  ctx.fixpoint = fixpoint;
  ctx.paths = paths;
  ctx.threads = threads;
  return ctx;
}

}  // namespace bsdej
