#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flexclf/clf.hpp"
#include "flexclf/controller.hpp"
#include "flexclf/model.hpp"
#include "flexclf/solver.hpp"

namespace flexclf {

enum class ControllerKind { Classical, Flexible };

const char* to_string(ControllerKind kind);

/// Everything needed to reproduce one closed-loop run.
struct Scenario {
  PlantModel model;
  QuadraticCLF V;
  ConeParams cone;
  Matrix R_u;
  double alpha = 1.0;
  EnvelopeSchedule envelope;
  ControllerKind controller = ControllerKind::Flexible;
  Vector x0;
  int steps = 200;
  double Ts = 1.0;
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

/// Throws ConfigError naming the offending field.
void validate(const Scenario& s);

ClassicalController classical_controller(const Scenario& s);
FlexibleController flexible_controller(const Scenario& s);

enum class StepStatus { Optimal, Infeasible, BestEffort };

const char* to_string(StepStatus status);

struct StepRecord {
  int k = 0;
  double t = 0.0;
  Vector x;
  Vector u;
  double lambda = 0.0;
  double V = 0.0;
  double lambda_bar = 0.0;
  /// Upper bound on V(x_k); NaN once a best-effort step voided the
  /// certificate.
  double cert_bound = 0.0;
  StepStatus status = StepStatus::Optimal;
  double solve_time_us = 0.0;
};

struct TrajectoryLog {
  std::vector<StepRecord> records;
  Vector final_state;
  double Ts = 1.0;
};

struct LatencySummary {
  double median_us = 0.0;
  double p95_us = 0.0;
  double p99_us = 0.0;
  double max_us = 0.0;
  double budget_us = 0.0;
  bool budget_ok = false;
  std::size_t count = 0;
};

struct RunSummary {
  bool converged = false;
  /// First K with ||x_K|| <= convergence_tol, or -1.
  int steps_to_tol = -1;
  Vector peak_abs;
  double total_slack = 0.0;
  int infeasible_steps = 0;
  int best_effort_steps = 0;
  bool aborted = false;
  int first_infeasible_step = -1;
  /// First step whose bound is void, or -1 while the certificate holds.
  int certificate_void_from = -1;
  double V0 = 0.0;
  double final_V = 0.0;
  LatencySummary latency;
};

struct RunResult {
  TrajectoryLog log;
  RunSummary summary;
};

/// Classical infeasibility aborts the run; flexible infeasibility applies
/// best_effort_step, flags the row and voids the certificate.
RunResult run_closed_loop(const Scenario& s);

/// Nearest-rank percentile of an unsorted sample, p in (0, 100].
double nearest_rank_percentile(std::span<const double> values, double p);

/// Latency percentiles; budget_ok = p99 < budget_us. Throws EmptyLog.
LatencySummary timing_stats(std::span<const double> solve_times_us,
                            double budget_us);
LatencySummary timing_stats(const TrajectoryLog& log);

enum class CellClass { ClassicalOK, FlexibleOnly, Neither };

const char* to_string(CellClass c);

struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> counts;
  std::size_t max_cells = 1000000;

  std::size_t cell_count() const;
  /// Grid point for a row-major index vector.
  Vector point(std::span<const int> index) const;
};

struct MapCell {
  std::vector<int> index;
  Vector x0;
  CellClass cls = CellClass::Neither;
};

struct FeasibilityMap {
  GridSpec grid;
  std::vector<MapCell> cells;  // row-major by grid index

  std::size_t count(CellClass c) const;
};

/// Runs both controllers from every grid point. Cells are spread over `jobs`
/// worker threads; the result order does not depend on scheduling. Throws
/// GridTooLarge, ConfigError.
FeasibilityMap feasibility_map(const Scenario& base, const GridSpec& grid,
                               int jobs = 1);

}  // namespace flexclf
