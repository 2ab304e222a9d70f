#include "flexclf/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "flexclf/error.hpp"

namespace flexclf {

namespace {

void config_check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

const char* to_string(ControllerKind kind) {
  return kind == ControllerKind::Classical ? "classical" : "flexible";
}

const char* to_string(StepStatus status) {
  switch (status) {
    case StepStatus::Optimal:
      return "optimal";
    case StepStatus::Infeasible:
      return "infeasible";
    case StepStatus::BestEffort:
      return "best_effort";
  }
  return "unknown";
}

const char* to_string(CellClass c) {
  switch (c) {
    case CellClass::ClassicalOK:
      return "classical";
    case CellClass::FlexibleOnly:
      return "flexible_only";
    case CellClass::Neither:
      return "neither";
  }
  return "unknown";
}

void validate(const Scenario& s) {
  config_check(s.steps >= 1, "steps must be >= 1");
  config_check(s.convergence_tol > 0.0, "convergence_tol must be > 0");
  config_check(s.Ts > 0.0, "Ts must be > 0");
  config_check(s.x0.size() == s.model.n(), "x0 must have n entries");
  config_check(s.x0.allFinite(), "x0 must be finite");
  config_check(s.V.n() == s.model.n(), "CLF dimension must equal n");
  try {
    if (s.controller == ControllerKind::Classical) {
      validate(classical_controller(s));
    } else {
      validate(flexible_controller(s));
    }
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  } catch (const DimensionMismatch& e) {
    throw ConfigError(e.what());
  }
}

ClassicalController classical_controller(const Scenario& s) {
  return ClassicalController{s.V, s.cone, s.R_u};
}

FlexibleController flexible_controller(const Scenario& s) {
  return FlexibleController{s.V, s.cone, s.R_u, s.alpha, s.envelope};
}

RunResult run_closed_loop(const Scenario& s) {
  validate(s);
  const auto classical = classical_controller(s);
  const auto flexible = flexible_controller(s);
  const double rho = s.cone.rho;

  RunResult out;
  TrajectoryLog& log = out.log;
  RunSummary& sum = out.summary;
  log.Ts = s.Ts;
  log.records.reserve(s.steps);
  sum.peak_abs = s.x0.cwiseAbs();
  sum.V0 = s.V.evaluate(s.x0);

  Vector x = s.x0;
  double cert = s.cone.c;
  bool cert_valid = true;
  for (int k = 0; k < s.steps; ++k) {
    if (sum.steps_to_tol < 0 && x.norm() <= s.convergence_tol) sum.steps_to_tol = k;

    StepRecord rec;
    rec.k = k;
    rec.t = static_cast<double>(k) * s.Ts;
    rec.x = x;
    rec.V = s.V.evaluate(x);
    rec.cert_bound = cert_valid ? cert : std::numeric_limits<double>::quiet_NaN();

    ControlDecision d = s.controller == ControllerKind::Classical
                            ? classical_step(classical, s.model, x, s.solver)
                            : flexible_step(flexible, s.model, x, k, s.solver);
    rec.lambda_bar = d.lambda_max;
    rec.solve_time_us = d.solve_time_us;

    if (d.status == SolveStatus::Infeasible) {
      ++sum.infeasible_steps;
      if (s.controller == ControllerKind::Classical) {
        rec.u = d.u;
        rec.lambda = 0.0;
        rec.status = StepStatus::Infeasible;
        log.records.push_back(std::move(rec));
        sum.aborted = true;
        sum.first_infeasible_step = k;
        break;
      }
      if (sum.first_infeasible_step < 0) sum.first_infeasible_step = k;
      const ControlDecision fallback = best_effort_step(s.V, s.model, x);
      ++sum.best_effort_steps;
      rec.u = fallback.u;
      rec.lambda = 0.0;
      rec.status = StepStatus::BestEffort;
      rec.solve_time_us += fallback.solve_time_us;
      if (cert_valid) sum.certificate_void_from = k + 1;
      cert_valid = false;
    } else {
      rec.u = d.u;
      rec.lambda = d.lambda;
      rec.status = StepStatus::Optimal;
      sum.total_slack += d.lambda;
      cert = rho * cert + d.lambda;
    }

    x = step(s.model, x, rec.u);
    sum.peak_abs = sum.peak_abs.cwiseMax(x.cwiseAbs());
    log.records.push_back(std::move(rec));
  }

  const int executed = static_cast<int>(log.records.size());
  if (!sum.aborted && sum.steps_to_tol < 0 && x.norm() <= s.convergence_tol)
    sum.steps_to_tol = executed;
  sum.converged = sum.steps_to_tol >= 0;
  log.final_state = x;
  sum.final_V = s.V.evaluate(x);
  sum.latency = timing_stats(log);
  return out;
}

double nearest_rank_percentile(std::span<const double> values, double p) {
  if (values.empty()) throw EmptyLog("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw InvalidParameter("percentile must lie in (0,100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencySummary timing_stats(std::span<const double> times, double budget_us) {
  if (times.empty()) throw EmptyLog("no solve times recorded");
  LatencySummary s;
  s.count = times.size();
  s.median_us = nearest_rank_percentile(times, 50.0);
  s.p95_us = nearest_rank_percentile(times, 95.0);
  s.p99_us = nearest_rank_percentile(times, 99.0);
  s.max_us = *std::max_element(times.begin(), times.end());
  s.budget_us = budget_us;
  s.budget_ok = s.p99_us < budget_us;
  return s;
}

LatencySummary timing_stats(const TrajectoryLog& log) {
  std::vector<double> times;
  times.reserve(log.records.size());
  for (const auto& r : log.records) times.push_back(r.solve_time_us);
  return timing_stats(times, log.Ts * 1e6);
}

std::size_t GridSpec::cell_count() const {
  std::size_t total = 1;
  for (int c : counts) {
    if (c < 1) return 0;
    const auto cs = static_cast<std::size_t>(c);
    if (total > std::numeric_limits<std::size_t>::max() / cs)
      return std::numeric_limits<std::size_t>::max();
    total *= cs;
  }
  return total;
}

Vector GridSpec::point(std::span<const int> index) const {
  Vector x(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t d = 0; d < counts.size(); ++d) {
    if (counts[d] == 1) {
      x[d] = 0.5 * (lower[d] + upper[d]);
    } else {
      const double spacing = (upper[d] - lower[d]) / (counts[d] - 1);
      x[d] = lower[d] + index[d] * spacing;
    }
  }
  return x;
}

std::size_t FeasibilityMap::count(CellClass c) const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(),
                    [c](const MapCell& cell) { return cell.cls == c; }));
}

FeasibilityMap feasibility_map(const Scenario& base, const GridSpec& grid,
                               int jobs) {
  const std::size_t n = static_cast<std::size_t>(base.model.n());
  config_check(grid.lower.size() == n && grid.upper.size() == n &&
                   grid.counts.size() == n,
               "grid dimensions must match the plant state dimension");
  for (std::size_t d = 0; d < n; ++d) {
    config_check(grid.counts[d] >= 1, "grid counts must be >= 1");
    config_check(grid.lower[d] <= grid.upper[d], "grid lower must be <= upper");
  }
  const std::size_t total = grid.cell_count();
  if (total > grid.max_cells) {
    std::ostringstream os;
    os << "grid has " << total << " cells, cap is " << grid.max_cells;
    throw GridTooLarge(os.str());
  }

  FeasibilityMap map;
  map.grid = grid;
  map.cells.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::vector<int> index(n);
    std::size_t rem = i;
    for (std::size_t d = n; d-- > 0;) {
      index[d] = static_cast<int>(rem % grid.counts[d]);
      rem /= grid.counts[d];
    }
    map.cells[i].x0 = grid.point(index);
    map.cells[i].index = std::move(index);
  }

  auto classify = [&base](const Vector& x0) {
    Scenario s = base;
    s.x0 = x0;
    s.cone.c = std::max(s.V.evaluate(x0), std::numeric_limits<double>::min());
    s.controller = ControllerKind::Classical;
    const RunSummary c = run_closed_loop(s).summary;
    if (!c.aborted && c.converged) return CellClass::ClassicalOK;
    s.controller = ControllerKind::Flexible;
    const RunSummary f = run_closed_loop(s).summary;
    if (f.best_effort_steps == 0 && f.converged) return CellClass::FlexibleOnly;
    return CellClass::Neither;
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        map.cells[i].cls = classify(map.cells[i].x0);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int workers = std::clamp(jobs, 1, 256);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return map;
}

}  // namespace flexclf
