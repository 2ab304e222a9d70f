#pragma once

#include <cstdint>

#include "flexclf/model.hpp"

namespace flexclf {

/// Candidate CLF V(x) = x' P x with P symmetric positive definite.
class QuadraticCLF {
 public:
  /// Throws InvalidParameter if P is not square, not symmetric within 1e-12
  /// (relative to its largest entry) or fails a Cholesky factorization.
  explicit QuadraticCLF(Matrix P);

  const Matrix& P() const { return P_; }
  int n() const { return static_cast<int>(P_.rows()); }

  /// x' P x. Throws DimensionMismatch.
  double evaluate(const Vector& x) const;

 private:
  Matrix P_;
};

/// Contraction rate rho in [0,1) and cone scale c > 0 of the decay cone
/// V(x_k) <= c rho^k.
struct ConeParams {
  double rho = 0.9;
  double c = 1.0;
};

void validate(const ConeParams& cone);

/// V(g + h u) = u' H u + q' u + r0 at a fixed state.
struct DecreaseQuadratic {
  Matrix H;
  Vector q;
  double r0 = 0.0;
};

DecreaseQuadratic decrease_quadratic(const QuadraticCLF& V,
                                     const PlantModel& model, const Vector& x);

/// Stabilizing solution of the discrete algebraic Riccati equation
///   P = A'PA - A'PB (R + B'PB)^{-1} B'PA + Q.
///
/// Uses the doubling form of the Riccati recursion started at Q. Throws
/// NoConvergence if the iterates diverge or the scaled residual exceeds 1e-8,
/// InvalidParameter for malformed weights.
QuadraticCLF synthesize_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                             const Matrix& R);

/// max |DARE(P)| entry-wise.
double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P);

/// K = (R + B'PB)^{-1} B'PA, so that u = -K x.
Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R,
                const Matrix& P);

/// P = sum_k (A_cl')^k Q A_cl^k by squaring. Throws NoConvergence.
QuadraticCLF lyapunov_solve(const Matrix& A_cl, const Matrix& Q);

struct ContractionReport {
  double feasible_fraction = 0.0;
  int feasible = 0;
  int samples = 0;
};

/// Fraction of states drawn uniformly from {V(x) <= radius} for which some
/// admissible input achieves V(f(x,u)) <= rho V(x).
ContractionReport verify_local_contraction(const QuadraticCLF& V,
                                           const PlantModel& model,
                                           const ConeParams& cone,
                                           double radius, int samples,
                                           std::uint64_t seed);

/// Largest V(f(x, sat(-K x))) / V(x) over states sampled from
/// {V(x) <= radius}.
double max_lqr_decrease_ratio(const QuadraticCLF& V, const PlantModel& model,
                              const Matrix& K, double radius, int samples,
                              std::uint64_t seed);

/// min(0.999, ratio rounded up to two decimals).
double default_rho_from_ratio(double ratio);

}  // namespace flexclf
