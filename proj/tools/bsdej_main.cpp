#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bsdej/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Backward SDEs with jumps: config-driven solves, verification and truncation ladders"};
  app.require_subcommand(1);

  bsdej::CommandLine cli;
  std::uint64_t seed = 0;
  std::string out;
  for (const char* name : {"solve", "verify", "ladder"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config,-c", cli.config_path, "run config (JSON, schema bsdej-config/1) or a report")
        ->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bsdej::kExitError;
  }
  cli.command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) cli.seed = seed;
  if (sub->count("--out") > 0) cli.out = out;
  return bsdej::run_command(cli, std::cout, std::cerr);
}
