#include "flexclf/cli/commands.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <system_error>

#include "flexclf/sampling.hpp"

namespace flexclf::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json latency_json(const LatencySummary& s) {
  json out = json::object();
  out["median_us"] = s.median_us;
  out["p95_us"] = s.p95_us;
  out["p99_us"] = s.p99_us;
  out["max_us"] = s.max_us;
  out["budget_us"] = s.budget_us;
  out["budget_ok"] = s.budget_ok;
  out["count"] = s.count;
  return out;
}

json optional_step(int k) { return k < 0 ? json(nullptr) : json(k); }

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string trajectory_csv(const TrajectoryLog& log) {
  std::string out;
  const Eigen::Index n = log.final_state.size();
  const Eigen::Index m = log.records.empty() ? 0 : log.records.front().u.size();
  out += "k,t";
  for (Eigen::Index i = 0; i < n; ++i) out += ",x_" + std::to_string(i);
  for (Eigen::Index i = 0; i < m; ++i) out += ",u_" + std::to_string(i);
  out += ",lambda,V,lambda_bar,cert_bound,status,solve_time_us\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.k);
    out += ',' + format_double(r.t);
    for (Eigen::Index i = 0; i < r.x.size(); ++i) out += ',' + format_double(r.x[i]);
    for (Eigen::Index i = 0; i < r.u.size(); ++i) out += ',' + format_double(r.u[i]);
    out += ',' + format_double(r.lambda);
    out += ',' + format_double(r.V);
    out += ',' + format_double(r.lambda_bar);
    out += ',' + format_double(r.cert_bound);
    out += ',';
    out += to_string(r.status);
    out += ',' + format_double(r.solve_time_us);
    out += '\n';
  }
  return out;
}

std::string feasibility_map_csv(const FeasibilityMap& map) {
  const std::size_t n = map.grid.counts.size();
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += "i_" + std::to_string(i) + ",";
  for (std::size_t i = 0; i < n; ++i) out += "x0_" + std::to_string(i) + ",";
  out += "class\n";
  for (const auto& cell : map.cells) {
    for (int idx : cell.index) out += std::to_string(idx) + ",";
    for (Eigen::Index i = 0; i < cell.x0.size(); ++i) out += format_double(cell.x0[i]) + ",";
    out += to_string(cell.cls);
    out += '\n';
  }
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw ConfigError("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
  }
}

int cmd_run(const Config& config, const fs::path& out_dir) {
  const Resolved res = resolve(config);
  const RunResult run = run_closed_loop(res.scenario);
  const RunSummary& s = run.summary;

  json summary = json::object();
  summary["command"] = "run";
  summary["plant"] = res.scenario.model.name();
  summary["controller"] = to_string(res.scenario.controller);
  summary["status"] = s.aborted ? "aborted_infeasible" : "completed";
  summary["steps_executed"] = run.log.records.size();
  summary["converged"] = s.converged;
  summary["steps_to_tol"] = optional_step(s.steps_to_tol);
  summary["first_infeasible_step"] = optional_step(s.first_infeasible_step);
  summary["infeasible_steps"] = s.infeasible_steps;
  summary["best_effort_steps"] = s.best_effort_steps;
  summary["certificate_valid"] = s.certificate_void_from < 0;
  summary["certificate_void_from"] = optional_step(s.certificate_void_from);
  summary["total_slack"] = s.total_slack;
  summary["V0"] = s.V0;
  summary["final_V"] = s.final_V;
  summary["final_state"] = vector_json(run.log.final_state);
  summary["peak_abs"] = vector_json(s.peak_abs);
  summary["latency"] = latency_json(s.latency);
  summary["details"] = res.details;
  summary["config"] = to_json(res.config);

  prepare_dir(out_dir);
  write_file_atomic(out_dir / "trajectory.csv", trajectory_csv(run.log));
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  return s.aborted ? kExitInfeasible : kExitOk;
}

int cmd_map(const Config& config, const fs::path& out_dir, int jobs) {
  if (!config.grid) throw ValidationError("grid: required by the map command");
  const Resolved res = resolve(config);
  GridSpec grid{config.grid->lower, config.grid->upper, config.grid->counts,
                config.grid->max_cells};
  const auto start = std::chrono::steady_clock::now();
  const FeasibilityMap map = feasibility_map(res.scenario, grid, jobs);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json summary = json::object();
  summary["command"] = "map";
  summary["plant"] = res.scenario.model.name();
  summary["cells"] = map.cells.size();
  summary["classical"] = map.count(CellClass::ClassicalOK);
  summary["flexible_only"] = map.count(CellClass::FlexibleOnly);
  summary["neither"] = map.count(CellClass::Neither);
  summary["jobs"] = jobs;
  summary["elapsed_s"] = elapsed;
  summary["details"] = res.details;
  summary["config"] = to_json(res.config);

  prepare_dir(out_dir);
  write_file_atomic(out_dir / "feasibility_map.csv", feasibility_map_csv(map));
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

LatencySummary bench_controller(const Resolved& res) {
  const Scenario& s = res.scenario;
  const double radius = std::max(s.V.evaluate(s.x0), 1e-12);
  Rng rng(s.seed);
  const auto states = sample_sublevel_set(s.V.P(), radius, res.config.bench.repetitions, rng);
  const auto classical = classical_controller(s);
  const auto flexible = flexible_controller(s);

  std::vector<double> times;
  times.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const ControlDecision d =
        s.controller == ControllerKind::Classical
            ? classical_step(classical, s.model, states[i], s.solver)
            : flexible_step(flexible, s.model, states[i], static_cast<int>(i % s.steps), s.solver);
    const auto t1 = std::chrono::steady_clock::now();
    if (!d.u.allFinite()) throw NumericalBreakdown("controller returned a non-finite input");
    times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  return timing_stats(times, *res.config.bench.budget_us);
}

int cmd_bench(const Config& config, const fs::path& out_dir) {
  const Resolved res = resolve(config);
  const LatencySummary lat = bench_controller(res);

  json out = latency_json(lat);
  out["plant"] = res.scenario.model.name();
  out["controller"] = to_string(res.scenario.controller);
  out["config"] = to_json(res.config);

  prepare_dir(out_dir);
  write_file_atomic(out_dir / "latency.json", out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace flexclf::cli
