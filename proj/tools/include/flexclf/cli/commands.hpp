#pragma once

#include <filesystem>
#include <string>

#include "flexclf/cli/config.hpp"
#include "flexclf/sim.hpp"

namespace flexclf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
/// A classical run hit an infeasible step and aborted.
inline constexpr int kExitInfeasible = 2;

/// Shortest decimal that round-trips to the same double; "nan", "inf",
/// "-inf" for non-finite values.
std::string format_double(double v);

/// Columns: k,t,x_0..x_{n-1},u_0..u_{m-1},lambda,V,lambda_bar,cert_bound,
/// status,solve_time_us.
std::string trajectory_csv(const TrajectoryLog& log);

/// Columns: i_0..i_{n-1},x0_0..x0_{n-1},class.
std::string feasibility_map_csv(const FeasibilityMap& map);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Writes trajectory.csv and summary.json. Returns kExitInfeasible when a
/// classical run aborts.
int cmd_run(const Config& config, const std::filesystem::path& out_dir);

/// Writes feasibility_map.csv and summary.json.
int cmd_map(const Config& config, const std::filesystem::path& out_dir, int jobs = 1);

/// Times `bench.repetitions` controller steps from states sampled in
/// {V <= V(x0)} and writes latency.json.
int cmd_bench(const Config& config, const std::filesystem::path& out_dir);

/// The measurement behind cmd_bench.
LatencySummary bench_controller(const Resolved& resolved);

}  // namespace flexclf::cli
