#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsdej/config.hpp"

namespace bsdej {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitDivergence = 2, kExitVerifyFailed = 3 };

inline constexpr const char* kReportSchema = "bsdej-report/1";
inline constexpr const char* kToolVersion = "1.0.0";
/// Names the default output directory when neither --out nor output.dir is set.
inline constexpr const char* kOutDirEnv = "BSDEJ_OUT_DIR";

struct CommandResult {
  int exit_code = kExitOk;
  /// {"header": {...}, "body": {...}}; only the header varies between identical runs.
  nlohmann::json report;
  std::vector<std::filesystem::path> files;
  std::string summary;
};

/// --out, then output.dir, then $BSDEJ_OUT_DIR, then the working directory.
std::filesystem::path resolve_output_dir(const RunConfig& config, const std::optional<std::string>& out);

/// Solve (Picard with optional subdivision, or a direct solve) and write
/// <prefix>.solve.json plus <prefix>.picard.csv.
CommandResult cmd_solve(const RunConfig& config, const std::filesystem::path& out_dir);

/// Solve, then both a priori estimates, the uniqueness experiment and the CI
/// suite when configured. Writes <prefix>.verify.json, appends to
/// <prefix>.estimates.jsonl and writes <prefix>.suite.csv for the suite.
CommandResult cmd_verify(const RunConfig& config, const std::filesystem::path& out_dir);

/// Truncation ladder over ladder.n_list. Writes <prefix>.ladder.json and .csv.
CommandResult cmd_ladder(const RunConfig& config, const std::filesystem::path& out_dir);

struct CommandLine {
  std::string command;  // solve | verify | ladder
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

/// Loads the config, dispatches, and maps every failure to an exit code with
/// a one-line message on err.
int run_command(const CommandLine& cli, std::ostream& out, std::ostream& err);

/// Report with the header removed, serialized; equal for reproducible runs.
std::string report_body_text(const nlohmann::json& report);

}  // namespace bsdej
