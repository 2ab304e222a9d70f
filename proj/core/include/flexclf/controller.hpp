#pragma once

#include <span>

#include "flexclf/clf.hpp"
#include "flexclf/model.hpp"
#include "flexclf/solver.hpp"

namespace flexclf {

/// Enforces V(f(x,u)) <= rho V(x) at every step.
struct ClassicalController {
  QuadraticCLF V;
  ConeParams cone;
  Matrix R_u;
};

/// Per-step slack cap lambda_bar_k = delta * gamma^k.
struct EnvelopeSchedule {
  double delta = 0.0;
  double gamma = 0.9;
};

/// Enforces V(f(x,u)) <= rho V(x) + lambda with lambda in [0, lambda_bar_k]
/// chosen on-line, trading alpha * lambda against input effort.
struct FlexibleController {
  QuadraticCLF V;
  ConeParams cone;
  Matrix R_u;
  double alpha = 1.0;
  EnvelopeSchedule envelope;
};

struct ControlDecision {
  Vector u;
  double lambda = 0.0;
  /// Slack cap in force at this step (0 for the classical law).
  double lambda_max = 0.0;
  double V_next_bound = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  double kkt_residual = 0.0;
  double solve_time_us = 0.0;
};

void validate(const EnvelopeSchedule& envelope);
void validate(const ClassicalController& ctrl);
void validate(const FlexibleController& ctrl);

/// 1e3 * trace(R_u) / m.
double default_alpha(const Matrix& R_u);

double envelope(const EnvelopeSchedule& sched, int k);

/// rho^k V0 + sum_{j<k} rho^(k-1-j) lambda_j. Requires k <= lambdas.size().
double certified_bound(double V0, double rho, std::span<const double> lambdas,
                       int k);

OneStepProblem make_problem(const QuadraticCLF& V, const PlantModel& model,
                            const Vector& x, double bound, const Matrix& R_u,
                            double alpha, double lambda_max);

/// Infeasible results are passed through unchanged.
ControlDecision classical_step(const ClassicalController& ctrl,
                               const PlantModel& model, const Vector& x,
                               const SolverOptions& options = {});

ControlDecision flexible_step(const FlexibleController& ctrl,
                              const PlantModel& model, const Vector& x, int k,
                              const SolverOptions& options = {});

/// Input minimizing V(f(x,u)) over the box; status stays Infeasible so the
/// fallback remains visible downstream.
ControlDecision best_effort_step(const QuadraticCLF& V, const PlantModel& model,
                                 const Vector& x);

}  // namespace flexclf
