#include "flexclf/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "box_qp.hpp"
#include "flexclf/error.hpp"

namespace flexclf {

namespace {

constexpr double kMultiplierCap = 1e20;

bool all_finite(const Matrix& M) { return M.allFinite(); }

void breakdown(const std::string& what) { throw NumericalBreakdown(what); }

struct Weights {
  double effort;      // 1 / (1 + mu)
  double constraint;  // mu / (1 + mu)
};

Weights normalized(double mu) {
  if (std::isinf(mu)) return {0.0, 1.0};
  return {1.0 / (1.0 + mu), mu / (1.0 + mu)};
}

// The u-part of the Lagrangian u'Ru + mu (u'Hu + q'u), divided by (1 + mu)
// so that large multipliers stay well scaled.
class LagrangianMinimizer {
 public:
  LagrangianMinimizer(const OneStepProblem& p, const Matrix& R, const Matrix& H,
                      double tol)
      : p_(p), R_(R), H_(H), tol_(tol) {}

  Vector operator()(double mu) {
    const Weights w = normalized(mu);
    const Matrix M = 2.0 * (w.effort * R_ + w.constraint * H_);
    const Vector v = w.constraint * p_.q;
    auto r = detail::solve_box_qp(M, v, p_.u_box.lower, p_.u_box.upper, tol_);
    iterations += r.iterations;
    return r.u;
  }

  int iterations = 0;

 private:
  const OneStepProblem& p_;
  const Matrix& R_;
  const Matrix& H_;
  double tol_;
};

struct Bracket {
  double mu;
  Vector u;
  bool reached;
};

// Smallest multiplier above lo with constraint_value(u(mu)) <= target, given
// that it fails at lo. Grows hi geometrically until the constraint holds, then
// bisects until the interval is below 1e-12 (1 + mu).
Bracket find_multiplier(const OneStepProblem& p, LagrangianMinimizer& argmin,
                        double lo, double hi, double target, int& bisections) {
  Vector u_hi = argmin(hi);
  while (p.constraint_value(u_hi) > target) {
    if (hi >= kMultiplierCap) return {hi, u_hi, false};
    lo = hi;
    hi = std::min(kMultiplierCap, 4.0 * hi);
    u_hi = argmin(hi);
  }
  for (int i = 0; i < 400 && hi - lo > 1e-12 * (1.0 + hi); ++i) {
    const double mid = lo + 0.5 * (hi - lo);
    Vector u_mid = argmin(mid);
    ++bisections;
    if (p.constraint_value(u_mid) <= target) {
      hi = mid;
      u_hi = std::move(u_mid);
    } else {
      lo = mid;
    }
  }
  return {hi, u_hi, true};
}

double kkt_residual(const OneStepProblem& p, const Matrix& R, const Matrix& H,
                    const Vector& u, double lambda, double mu) {
  const Weights w = normalized(mu);
  const Vector grad = w.effort * 2.0 * (R * u) + w.constraint * (2.0 * (H * u) + p.q);
  const double stationarity =
      (u - p.u_box.clamp(u - grad)).cwiseAbs().maxCoeff();

  const double scale = 1.0 + std::abs(p.bound);
  const double gap = p.constraint_value(u) - p.bound - lambda;
  const double violation = std::max(0.0, gap) / scale;
  const double complementarity = w.constraint * std::abs(gap) / scale;

  // d/dlambda of the normalized Lagrangian is (alpha - mu) / (1 + mu).
  const double dlambda = w.effort * p.alpha - w.constraint;
  double lambda_res = 0.0;
  if (p.lambda_max > 0.0) {
    if (lambda <= 0.0) {
      lambda_res = std::max(0.0, -dlambda);
    } else if (lambda >= p.lambda_max) {
      lambda_res = std::max(0.0, dlambda);
    } else {
      lambda_res = std::abs(dlambda);
    }
  }
  return std::max({stationarity, violation, complementarity, lambda_res});
}

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

double OneStepProblem::constraint_value(const Vector& u) const {
  return u.dot(H * u) + q.dot(u) + r0;
}

double OneStepProblem::objective(const Vector& u, double lambda) const {
  return u.dot(R_u * u) + alpha * lambda;
}

double feasibility_slack(const OneStepProblem& p, double feasibility_tol) {
  const double magnitude = std::abs(p.bound) + std::abs(p.r0) + p.lambda_max;
  return feasibility_tol * std::min(1.0 + std::abs(p.bound), magnitude);
}

void validate(const OneStepProblem& p) {
  const Eigen::Index m = p.q.size();
  if (m < 1) throw DimensionMismatch("one-step problem has no inputs");
  if (p.H.rows() != m || p.H.cols() != m)
    throw DimensionMismatch("H must be m x m");
  if (p.R_u.rows() != m || p.R_u.cols() != m)
    throw DimensionMismatch("R_u must be m x m");
  if (p.u_box.lower.size() != m || p.u_box.upper.size() != m)
    throw DimensionMismatch("input box must have m entries");

  if (!all_finite(p.H) || !p.q.allFinite() || !std::isfinite(p.r0) ||
      !std::isfinite(p.bound) || !all_finite(p.R_u) ||
      !std::isfinite(p.alpha) || !std::isfinite(p.lambda_max) ||
      !p.u_box.lower.allFinite() || !p.u_box.upper.allFinite())
    breakdown("non-finite one-step problem data");
  if (p.alpha < 0.0) breakdown("alpha must be >= 0");
  if (p.lambda_max < 0.0) breakdown("lambda_max must be >= 0");
  for (Eigen::Index i = 0; i < m; ++i)
    if (p.u_box.lower[i] > p.u_box.upper[i]) breakdown("empty input box");

  const Matrix Rs = 0.5 * (p.R_u + p.R_u.transpose());
  if (Eigen::LLT<Matrix>(Rs).info() != Eigen::Success)
    breakdown("R_u is not positive definite");
  const Matrix Hs = 0.5 * (p.H + p.H.transpose());
  const double h_scale = 1.0 + Hs.cwiseAbs().maxCoeff();
  const double min_eig =
      m == 1 ? Hs(0, 0)
             : Eigen::SelfAdjointEigenSolver<Matrix>(Hs, Eigen::EigenvaluesOnly)
                   .eigenvalues()
                   .minCoeff();
  if (min_eig < -1e-10 * h_scale) {
    std::ostringstream os;
    os << "H is not positive semidefinite (min eigenvalue " << min_eig << ")";
    breakdown(os.str());
  }
}

BoxMinimum min_constraint_over_box(const OneStepProblem& p, double tol) {
  validate(p);
  const Matrix Hs = 0.5 * (p.H + p.H.transpose());
  auto r = detail::solve_box_qp(2.0 * Hs, p.q, p.u_box.lower, p.u_box.upper, tol);
  BoxMinimum out;
  out.value = p.constraint_value(r.u);
  out.u = std::move(r.u);
  return out;
}

SolveResult solve_one_step(const OneStepProblem& p, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate(p);
  if (!(options.tol > 0.0)) throw InvalidParameter("solver tol must be > 0");

  const Matrix R = 0.5 * (p.R_u + p.R_u.transpose());
  const Matrix H = 0.5 * (p.H + p.H.transpose());
  const double feas_tol = feasibility_slack(p, options.feasibility_tol);

  SolveResult res;
  LagrangianMinimizer argmin(p, R, H, options.tol);
  int bisections = 0;

  auto finish = [&](Vector u, double lambda, double mu, SolveStatus status) {
    res.status = status;
    res.lambda = lambda;
    res.multiplier = mu;
    if (status == SolveStatus::Optimal) {
      res.objective = p.objective(u, lambda);
      res.kkt_residual = kkt_residual(p, R, H, u, lambda, mu);
    } else {
      res.objective = std::numeric_limits<double>::infinity();
      res.kkt_residual = 0.0;
    }
    res.u = std::move(u);
    res.iterations = argmin.iterations + bisections;
    res.solve_time_us = std::chrono::duration<double, std::micro>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    return res;
  };

  const BoxMinimum lowest = min_constraint_over_box(p, options.tol);
  if (lowest.value > p.bound + p.lambda_max + feas_tol) {
    return finish(lowest.u, p.lambda_max, 0.0, SolveStatus::Infeasible);
  }

  // Unconstrained in the quadratic constraint: mu = 0.
  Vector u0 = argmin(0.0);
  const double c0 = p.constraint_value(u0);
  if (c0 <= p.bound) return finish(std::move(u0), 0.0, 0.0, SolveStatus::Optimal);

  // lambda(mu) is 0 for mu < alpha and lambda_max for mu > alpha; at
  // mu = alpha the smallest lambda satisfying the constraint is taken.
  double lo = 0.0;
  if (p.alpha > 0.0) {
    Vector ua = argmin(p.alpha);
    const double ca = p.constraint_value(ua);
    if (ca <= p.bound) {
      Bracket b = find_multiplier(p, argmin, 0.0, p.alpha, p.bound, bisections);
      return finish(std::move(b.u), 0.0, b.mu, SolveStatus::Optimal);
    }
    if (ca - p.bound <= p.lambda_max) {
      return finish(std::move(ua), ca - p.bound, p.alpha, SolveStatus::Optimal);
    }
    lo = p.alpha;
  } else if (c0 - p.bound <= p.lambda_max) {
    return finish(std::move(u0), c0 - p.bound, 0.0, SolveStatus::Optimal);
  }

  const double target = p.bound + p.lambda_max;
  Bracket b = find_multiplier(p, argmin, lo, std::max(1.0, 4.0 * lo), target,
                              bisections);
  if (!b.reached) {
    // No finite multiplier: the feasible set is (numerically) the set of
    // minimizers of the constraint. Accept within the feasibility tolerance.
    Vector u = p.constraint_value(b.u) <= target + feas_tol ? b.u : lowest.u;
    return finish(std::move(u), p.lambda_max,
                  std::numeric_limits<double>::infinity(),
                  SolveStatus::Optimal);
  }
  return finish(std::move(b.u), p.lambda_max, b.mu, SolveStatus::Optimal);
}

}  // namespace flexclf
