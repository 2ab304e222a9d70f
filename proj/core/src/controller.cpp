#include "flexclf/controller.hpp"

#include <chrono>
#include <cmath>

#include "flexclf/error.hpp"

namespace flexclf {

namespace {

void validate_input_cost(const Matrix& R_u, int m) {
  if (R_u.rows() != m || R_u.cols() != m)
    throw DimensionMismatch("R_u must be m x m");
  if (Eigen::LLT<Matrix>(0.5 * (R_u + R_u.transpose())).info() != Eigen::Success)
    throw InvalidParameter("R_u must be positive definite");
}

ControlDecision from_result(const SolveResult& r, double bound) {
  ControlDecision d;
  d.u = r.u;
  d.lambda = r.lambda;
  d.V_next_bound = bound + r.lambda;
  d.status = r.status;
  d.kkt_residual = r.kkt_residual;
  d.solve_time_us = r.solve_time_us;
  return d;
}

}  // namespace

void validate(const EnvelopeSchedule& e) {
  if (!(e.delta >= 0.0) || !std::isfinite(e.delta))
    throw InvalidParameter("delta must be >= 0");
  if (!(e.gamma >= 0.0 && e.gamma < 1.0))
    throw InvalidParameter("gamma must lie in [0,1)");
}

void validate(const ClassicalController& ctrl) {
  validate(ctrl.cone);
  validate_input_cost(ctrl.R_u, static_cast<int>(ctrl.R_u.rows()));
}

void validate(const FlexibleController& ctrl) {
  validate(ctrl.cone);
  validate_input_cost(ctrl.R_u, static_cast<int>(ctrl.R_u.rows()));
  if (!(ctrl.alpha > 0.0) || !std::isfinite(ctrl.alpha))
    throw InvalidParameter("alpha must be > 0");
  validate(ctrl.envelope);
}

double default_alpha(const Matrix& R_u) {
  return 1e3 * R_u.trace() / static_cast<double>(R_u.rows());
}

double envelope(const EnvelopeSchedule& sched, int k) {
  if (k < 0) throw InvalidParameter("step index must be >= 0");
  return sched.delta * std::pow(sched.gamma, k);
}

double certified_bound(double V0, double rho, std::span<const double> lambdas,
                       int k) {
  if (k < 0 || static_cast<std::size_t>(k) > lambdas.size())
    throw InvalidParameter("certified_bound: k exceeds the slack history");
  double bound = V0;
  for (int j = 0; j < k; ++j) bound = rho * bound + lambdas[j];
  return bound;
}

OneStepProblem make_problem(const QuadraticCLF& V, const PlantModel& model,
                            const Vector& x, double bound, const Matrix& R_u,
                            double alpha, double lambda_max) {
  const DecreaseQuadratic d = decrease_quadratic(V, model, x);
  OneStepProblem p;
  p.H = d.H;
  p.q = d.q;
  p.r0 = d.r0;
  p.bound = bound;
  p.R_u = R_u;
  p.alpha = alpha;
  p.lambda_max = lambda_max;
  p.u_box = model.input_box();
  return p;
}

ControlDecision classical_step(const ClassicalController& ctrl,
                               const PlantModel& model, const Vector& x,
                               const SolverOptions& options) {
  const double bound = ctrl.cone.rho * ctrl.V.evaluate(x);
  const OneStepProblem p = make_problem(ctrl.V, model, x, bound, ctrl.R_u, 0.0, 0.0);
  return from_result(solve_one_step(p, options), bound);
}

ControlDecision flexible_step(const FlexibleController& ctrl,
                              const PlantModel& model, const Vector& x, int k,
                              const SolverOptions& options) {
  const double bound = ctrl.cone.rho * ctrl.V.evaluate(x);
  const double cap = envelope(ctrl.envelope, k);
  const OneStepProblem p =
      make_problem(ctrl.V, model, x, bound, ctrl.R_u, ctrl.alpha, cap);
  ControlDecision d = from_result(solve_one_step(p, options), bound);
  d.lambda_max = cap;
  return d;
}

ControlDecision best_effort_step(const QuadraticCLF& V, const PlantModel& model,
                                 const Vector& x) {
  const auto start = std::chrono::steady_clock::now();
  OneStepProblem p = make_problem(V, model, x, 0.0,
                                  Matrix::Identity(model.m(), model.m()), 0.0, 0.0);
  const BoxMinimum best = min_constraint_over_box(p);
  ControlDecision d;
  d.u = best.u;
  d.V_next_bound = best.value;
  d.status = SolveStatus::Infeasible;
  d.solve_time_us = std::chrono::duration<double, std::micro>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return d;
}

}  // namespace flexclf
