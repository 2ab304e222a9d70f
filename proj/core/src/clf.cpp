#include "flexclf/clf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "flexclf/error.hpp"
#include "flexclf/sampling.hpp"
#include "flexclf/solver.hpp"

namespace flexclf {

namespace {

double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

Matrix symmetrized(const Matrix& M) { return 0.5 * (M + M.transpose()); }

void require_square(const Matrix& M, Eigen::Index n, const char* what) {
  if (M.rows() != n || M.cols() != n) {
    std::ostringstream os;
    os << what << " must be " << n << "x" << n << ", got " << M.rows() << "x"
       << M.cols();
    throw DimensionMismatch(os.str());
  }
}

}  // namespace

QuadraticCLF::QuadraticCLF(Matrix P) : P_(std::move(P)) {
  if (P_.rows() != P_.cols() || P_.rows() == 0)
    throw InvalidParameter("CLF matrix must be square and non-empty");
  if (!P_.allFinite()) throw InvalidParameter("CLF matrix has non-finite entries");
  const double asym = max_abs(P_ - P_.transpose());
  if (asym > 1e-12 * std::max(1.0, max_abs(P_)))
    throw InvalidParameter("CLF matrix is not symmetric");
  P_ = symmetrized(P_);
  if (Eigen::LLT<Matrix>(P_).info() != Eigen::Success)
    throw InvalidParameter("CLF matrix is not positive definite");
}

double QuadraticCLF::evaluate(const Vector& x) const {
  if (x.size() != P_.rows()) {
    std::ostringstream os;
    os << "state has dimension " << x.size() << ", CLF expects " << P_.rows();
    throw DimensionMismatch(os.str());
  }
  return x.dot(P_ * x);
}

void validate(const ConeParams& cone) {
  if (!(cone.rho >= 0.0 && cone.rho < 1.0))
    throw InvalidParameter("rho must lie in [0,1)");
  if (!(cone.c > 0.0) || !std::isfinite(cone.c))
    throw InvalidParameter("c must be > 0");
}

DecreaseQuadratic decrease_quadratic(const QuadraticCLF& V,
                                     const PlantModel& model, const Vector& x) {
  if (V.n() != model.n())
    throw DimensionMismatch("CLF and plant state dimensions differ");
  const Vector g = model.drift(x);
  const Matrix h = model.input_gain(x);
  const Matrix& P = V.P();
  const Vector Pg = P * g;
  DecreaseQuadratic d;
  d.H = symmetrized(h.transpose() * P * h);
  d.q = 2.0 * h.transpose() * Pg;
  d.r0 = g.dot(Pg);
  return d;
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P) {
  const Matrix BtPA = B.transpose() * P * A;
  const Matrix S = R + B.transpose() * P * B;
  const Matrix rhs = A.transpose() * P * A - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
  return max_abs(rhs - P);
}

Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R,
                const Matrix& P) {
  const Matrix S = R + B.transpose() * P * B;
  return S.ldlt().solve(B.transpose() * P * A);
}

QuadraticCLF synthesize_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                             const Matrix& R) {
  const Eigen::Index n = A.rows();
  require_square(A, n, "A");
  if (B.rows() != n) throw DimensionMismatch("B must have as many rows as A");
  const Eigen::Index m = B.cols();
  require_square(Q, n, "Q");
  require_square(R, m, "R");
  const Matrix Rs = symmetrized(R);
  Eigen::LLT<Matrix> r_llt(Rs);
  if (r_llt.info() != Eigen::Success)
    throw InvalidParameter("R must be positive definite");

  // Doubling form of the Riccati recursion: after k passes H holds the
  // 2^k-th Riccati iterate, so convergence is quadratic even when the
  // closed loop is slow.
  const Matrix I = Matrix::Identity(n, n);
  Matrix Ak = A;
  Matrix Gk = symmetrized(B * r_llt.solve(B.transpose()));
  Matrix Hk = symmetrized(Q);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const Eigen::PartialPivLU<Matrix> W(I + Gk * Hk);
    const Matrix WA = W.solve(Ak);
    const Matrix WG = W.solve(Gk);
    const Matrix H_next = symmetrized(Hk + Ak.transpose() * Hk * WA);
    const Matrix G_next = symmetrized(Gk + Ak * WG * Ak.transpose());
    const Matrix A_next = Ak * WA;
    if (!H_next.allFinite() || !G_next.allFinite() || !A_next.allFinite())
      throw NoConvergence("Riccati iteration diverged (pair not stabilizable?)");
    const double diff = max_abs(H_next - Hk);
    Hk = H_next;
    Gk = G_next;
    Ak = A_next;
    if (diff <= 1e-12 * std::max(1.0, max_abs(Hk))) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergence("Riccati iteration did not converge (pair not stabilizable?)");

  // Newton (Hewer) polish: the Lyapunov equation of the current closed loop
  // removes the roundoff the doubling steps accumulate.
  double residual = dare_residual(A, B, Q, Rs, Hk);
  for (int it = 0; it < 2 && residual > 0.0; ++it) {
    const Matrix K = lqr_gain(A, B, Rs, Hk);
    Matrix candidate;
    try {
      candidate = lyapunov_solve(A - B * K, symmetrized(Q + K.transpose() * Rs * K)).P();
    } catch (const Error&) {
      break;
    }
    const double r = dare_residual(A, B, Q, Rs, candidate);
    if (!(r < residual)) break;
    Hk = candidate;
    residual = r;
  }
  if (!(residual <= 1e-8 * std::max(1.0, max_abs(Hk)))) {
    std::ostringstream os;
    os << "Riccati residual " << residual << " exceeds tolerance";
    throw NoConvergence(os.str());
  }
  return QuadraticCLF(Hk);
}

QuadraticCLF lyapunov_solve(const Matrix& A_cl, const Matrix& Q) {
  const Eigen::Index n = A_cl.rows();
  require_square(A_cl, n, "A_cl");
  require_square(Q, n, "Q");
  Matrix Ak = A_cl;
  Matrix P = symmetrized(Q);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const Matrix next = symmetrized(P + Ak.transpose() * P * Ak);
    Ak = Ak * Ak;
    if (!next.allFinite() || !Ak.allFinite())
      throw NoConvergence("Lyapunov doubling diverged (closed loop unstable?)");
    const double diff = max_abs(next - P);
    P = next;
    if (diff <= 1e-14 * std::max(1.0, max_abs(P))) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NoConvergence("Lyapunov doubling did not converge (closed loop unstable?)");
  const double residual = max_abs(A_cl.transpose() * P * A_cl - P + Q);
  if (!(residual <= 1e-10 * std::max(1.0, max_abs(P))))
    throw NoConvergence("Lyapunov residual exceeds tolerance");
  return QuadraticCLF(P);
}

ContractionReport verify_local_contraction(const QuadraticCLF& V,
                                           const PlantModel& model,
                                           const ConeParams& cone,
                                           double radius, int samples,
                                           std::uint64_t seed) {
  validate(cone);
  Rng rng(seed);
  const auto states = sample_sublevel_set(V.P(), radius, samples, rng);
  ContractionReport report;
  report.samples = samples;
  for (const Vector& x : states) {
    const DecreaseQuadratic d = decrease_quadratic(V, model, x);
    OneStepProblem p;
    p.H = d.H;
    p.q = d.q;
    p.r0 = d.r0;
    p.bound = cone.rho * V.evaluate(x);
    p.R_u = Matrix::Identity(model.m(), model.m());
    p.u_box = model.input_box();
    const BoxMinimum best = min_constraint_over_box(p);
    if (best.value <= p.bound + feasibility_slack(p, SolverOptions{}.feasibility_tol))
      ++report.feasible;
  }
  report.feasible_fraction = static_cast<double>(report.feasible) / samples;
  return report;
}

double max_lqr_decrease_ratio(const QuadraticCLF& V, const PlantModel& model,
                              const Matrix& K, double radius, int samples,
                              std::uint64_t seed) {
  Rng rng(seed);
  const auto states = sample_sublevel_set(V.P(), radius, samples, rng);
  double worst = 0.0;
  for (const Vector& x : states) {
    const double v = V.evaluate(x);
    if (v <= 0.0) continue;
    const Vector u = model.input_box().clamp(-K * x);
    worst = std::max(worst, V.evaluate(step(model, x, u)) / v);
  }
  return worst;
}

double default_rho_from_ratio(double ratio) {
  const double rounded = std::ceil(ratio * 100.0 - 1e-9) / 100.0;
  return std::clamp(rounded, 0.0, 0.999);
}

}  // namespace flexclf
