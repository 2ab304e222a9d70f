#pragma once

#include "flexclf/model.hpp"

namespace flexclf {

/// Data of the per-step program
///
///   minimize    u' R_u u + alpha * lambda
///   subject to  u' H u + q' u + r0 <= bound + lambda
///               u in u_box,  0 <= lambda <= lambda_max.
///
/// lambda_max = 0 gives the classical (unrelaxed) decrease condition.
struct OneStepProblem {
  Matrix H;
  Vector q;
  double r0 = 0.0;
  double bound = 0.0;
  Matrix R_u;
  double alpha = 0.0;
  double lambda_max = 0.0;
  InputBox u_box;

  int m() const { return static_cast<int>(q.size()); }
  /// u' H u + q' u + r0
  double constraint_value(const Vector& u) const;
  /// u' R_u u + alpha * lambda
  double objective(const Vector& u, double lambda) const;
};

enum class SolveStatus { Optimal, Infeasible };

const char* to_string(SolveStatus status);

struct SolveResult {
  Vector u;
  double lambda = 0.0;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  /// Multiplier of the quadratic constraint.
  double multiplier = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  double solve_time_us = 0.0;
};

struct SolverOptions {
  double tol = 1e-9;
  /// Slack allowed on the quadratic constraint, see feasibility_slack().
  double feasibility_tol = 1e-8;
};

/// feasibility_tol * min(1 + |bound|, |bound| + |r0| + lambda_max): absolute
/// plus relative, but never larger than the problem's own magnitude so that
/// states close to the origin are not declared feasible by the absolute term.
double feasibility_slack(const OneStepProblem& p, double feasibility_tol);

/// Dual bisection on the multiplier of the quadratic constraint, with an
/// exact box-QP inner solve for each trial multiplier.
///
/// When infeasible, `u` is the box point minimizing the constraint value and
/// `lambda` is lambda_max. Throws NumericalBreakdown for non-finite data,
/// indefinite H or a non positive definite R_u; DimensionMismatch for
/// inconsistent shapes.
SolveResult solve_one_step(const OneStepProblem& p,
                           const SolverOptions& options = {});

struct BoxMinimum {
  Vector u;
  double value = 0.0;
};

/// Global minimum of the convex quadratic u'Hu + q'u + r0 over the box.
BoxMinimum min_constraint_over_box(const OneStepProblem& p, double tol = 1e-9);

/// Brute-force reference: scans the box at `resolution` and then zooms in on
/// the incumbent down to `final_resolution`, with the slack set to the exact
/// constraint excess at each grid point. For m = 2 the scan is nested (outer
/// over u_0, inner over u_1). Independent of solve_one_step; meant for
/// validation. Throws ProblemTooLarge for m > 2 or more than 2e8 coarse points.
SolveResult grid_oracle(const OneStepProblem& p, double resolution,
                        double final_resolution = 0.0);

/// Checks shapes, finiteness and definiteness; throws as solve_one_step does.
void validate(const OneStepProblem& p);

}  // namespace flexclf
