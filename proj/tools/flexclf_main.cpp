// flexclf: closed-loop runs, feasibility maps and latency benchmarks for
// classical and flexible CLF controllers.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flexclf/cli/commands.hpp"
#include "flexclf/cli/config.hpp"

#ifndef FLEXCLF_VERSION
#define FLEXCLF_VERSION "0.0.0"
#endif

namespace {

using namespace flexclf::cli;

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config, "Scenario config (JSON)")->required();
  sub->add_option("--out", args.out, "Output directory")->required();
  sub->add_option("--seed", args.seed, "Override the config seed");
}

Config load(const CommonArgs& args) {
  Config cfg = parse_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical and flexible control Lyapunov function controllers"};
  app.set_version_flag("--version", std::string("flexclf ") + FLEXCLF_VERSION);
  app.require_subcommand(1);

  CommonArgs run_args, map_args, bench_args;
  int jobs = 1;
  CLI::App* run = app.add_subcommand("run", "Simulate one closed-loop run");
  add_common(run, run_args);
  CLI::App* map = app.add_subcommand("map", "Classify initial states on a grid");
  add_common(map, map_args);
  map->add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(1, 256));
  CLI::App* bench = app.add_subcommand("bench", "Measure per-step controller latency");
  add_common(bench, bench_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*run) return cmd_run(load(run_args), run_args.out);
    if (*map) return cmd_map(load(map_args), map_args.out, jobs);
    if (*bench) return cmd_bench(load(bench_args), bench_args.out);
  } catch (const std::exception& e) {
    std::cerr << "flexclf: error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
