#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsdej/errors.hpp"
#include "bsdej/estimates.hpp"
#include "bsdej/generators.hpp"
#include "bsdej/solver.hpp"

namespace bsdej {

inline constexpr const char* kConfigSchema = "bsdej-config/1";

/// Config validation failure. path is a dotted field path ("problem.horizon"),
/// line the 1-based line of that field in the source text (0 if unknown).
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string path, int line, const std::string& message);
  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

 private:
  std::string path_;
  int line_;
};

/// JSON -> BSDEProblem. Throws ConfigError naming the offending field.
/// The source text, when given, is used to attach line numbers. When
/// resolved is given it receives the problem with every default filled in.
BSDEProblem problem_from_json(const nlohmann::json& problem, const std::string& source = {},
                              nlohmann::json* resolved = nullptr);

struct SubdivisionConfig {
  std::string mode = "none";  // none | auto | fixed
  double safety = 0.5;
  std::optional<double> c_emp;
};

struct VerifyConfig {
  double p = 2.0;
  double ceiling = 1e3;
  bool uniqueness = true;
  std::vector<double> perturbation{10.0, 1.0, 1.0};
  /// Second regression degree for the uniqueness run on paths; absent means same basis.
  std::optional<int> alternate_degree;
  std::string suite = "none";  // none | ci
};

/// Fully resolved run description. Every field has a value after parsing.
struct RunConfig {
  explicit RunConfig(BSDEProblem p) : problem(std::move(p)) {}

  nlohmann::json problem_json;
  BSDEProblem problem;
  Method method = Method::tree;
  bool recombine = true;
  std::size_t node_cap = 10'000'000;
  int n_paths = 10000;
  BasisConfig basis;
  FixpointOptions fixpoint;
  std::uint64_t seed = 1;
  bool picard = true;
  PicardOptions picard_options;
  SubdivisionConfig subdivision;
  VerifyConfig verify;
  LadderOptions ladder;
  PathSetOptions paths;
  std::string output_dir;
  std::string prefix = "run";
  int threads = 1;

  /// Resolved config without execution and output settings; embedded in reports.
  nlohmann::json resolved() const;
  SolverContext context() const;
};

/// Parses config text. A report document ({"header", "body"}) is accepted and
/// its embedded body.config is used. Unknown keys are rejected. A seed
/// override replaces "seed" before defaults that derive from it are filled.
RunConfig parse_run_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace bsdej
