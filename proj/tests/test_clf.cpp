#include <gtest/gtest.h>

#include <cmath>

#include "flexclf/clf.hpp"
#include "flexclf/error.hpp"
#include "flexclf/sampling.hpp"
#include "test_util.hpp"

using namespace flexclf;
using testutil::random_matrix;
using testutil::vec;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST(QuadraticCLF, Evaluate) {
  EXPECT_DOUBLE_EQ(QuadraticCLF(Matrix::Identity(2, 2)).evaluate(vec({3.0, 4.0})), 25.0);
  Matrix P = Matrix::Zero(2, 2);
  P.diagonal() << 2.0, 1.0;
  EXPECT_DOUBLE_EQ(QuadraticCLF(P).evaluate(Vector::Ones(2)), 3.0);
  EXPECT_DOUBLE_EQ(QuadraticCLF(P).evaluate(Vector::Zero(2)), 0.0);
}

TEST(QuadraticCLF, PositiveAwayFromOrigin) {
  Rng rng(5);
  const Matrix G = random_matrix(rng, 3, 3);
  const QuadraticCLF V(G.transpose() * G + 0.01 * Matrix::Identity(3, 3));
  for (int t = 0; t < 200; ++t) {
    Vector x = random_matrix(rng, 3, 1);
    if (x.norm() == 0.0) continue;
    EXPECT_GT(V.evaluate(x), 0.0);
  }
}

TEST(QuadraticCLF, RejectsInvalidMatrices) {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(QuadraticCLF{asym}, InvalidParameter);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  EXPECT_THROW(QuadraticCLF{indefinite}, InvalidParameter);
  EXPECT_THROW(QuadraticCLF{Matrix::Zero(2, 3)}, InvalidParameter);
}

TEST(QuadraticCLF, DimensionMismatch) {
  EXPECT_THROW(QuadraticCLF(Matrix::Identity(2, 2)).evaluate(Vector::Zero(3)), DimensionMismatch);
}

TEST(ConeParams, RhoRange) {
  EXPECT_NO_THROW(validate(ConeParams{0.0, 1.0}));
  EXPECT_THROW(validate(ConeParams{1.0, 1.0}), InvalidParameter);
  EXPECT_THROW(validate(ConeParams{-0.1, 1.0}), InvalidParameter);
  EXPECT_THROW(validate(ConeParams{0.5, 0.0}), InvalidParameter);
  try {
    validate(ConeParams{1.2, 1.0});
  } catch (const InvalidParameter& e) {
    EXPECT_STREQ(e.what(), "rho must lie in [0,1)");
  }
}

TEST(Dare, GoldenRatio) {
  const QuadraticCLF V = synthesize_dare(scalar(1), scalar(1), scalar(1), scalar(1));
  EXPECT_NEAR(V.P()(0, 0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-9);
}

TEST(Dare, ScalarStableOpenLoop) {
  // p = a^2 p - a^2 p^2 / (1 + p) + 1 with a = 0.5 reduces to p^2 - p/4 - 1 = 0.
  const double expected = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  const Matrix A = scalar(0.5), B = scalar(1), Q = scalar(1), R = scalar(1);
  const QuadraticCLF V = synthesize_dare(A, B, Q, R);
  EXPECT_NEAR(V.P()(0, 0), expected, 1e-12);
  EXPECT_LE(dare_residual(A, B, Q, R, V.P()), 1e-10);
}

TEST(Dare, NoInputGivesLyapunovSolution) {
  const QuadraticCLF V = synthesize_dare(scalar(0.5), scalar(0), scalar(1), scalar(1));
  EXPECT_NEAR(V.P()(0, 0), 4.0 / 3.0, 1e-12);
}

TEST(Dare, UnstabilizablePairFails) {
  EXPECT_THROW(synthesize_dare(scalar(2.0), scalar(0), scalar(1), scalar(1)), NoConvergence);
}

TEST(Dare, RandomPairsSatisfyProperties) {
  Rng rng(11);
  int tested = 0;
  while (tested < 60) {
    const int n = 1 + static_cast<int>(rng.next() % 4);
    const int m = 1 + static_cast<int>(rng.next() % n);
    const Matrix A = random_matrix(rng, n, n), B = random_matrix(rng, n, m);
    const Matrix Gq = random_matrix(rng, n, n);
    const Matrix Q = Gq.transpose() * Gq + 0.1 * Matrix::Identity(n, n);
    const Matrix R = Matrix::Identity(m, m);
    QuadraticCLF V = QuadraticCLF(Matrix::Identity(1, 1));
    try {
      V = synthesize_dare(A, B, Q, R);
    } catch (const NoConvergence&) {
      continue;  // nearly uncontrollable draw
    }
    ++tested;
    const Matrix& P = V.P();
    EXPECT_LE((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(dare_residual(A, B, Q, R, P), 1e-8);
    // P dominates Q.
    EXPECT_EQ(Eigen::LLT<Matrix>(P - Q + 1e-9 * Matrix::Identity(n, n)).info(), Eigen::Success);
    // Scaling both weights scales the solution.
    const QuadraticCLF V3 = synthesize_dare(A, B, 3.0 * Q, 3.0 * R);
    EXPECT_LE((V3.P() - 3.0 * P).cwiseAbs().maxCoeff(), 1e-9 * 3.0 * P.cwiseAbs().maxCoeff());
    // The LQR closed loop is Schur stable.
    const Matrix Acl = A - B * lqr_gain(A, B, R, P);
    EXPECT_LT(Eigen::EigenSolver<Matrix>(Acl).eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Lyapunov, Examples) {
  EXPECT_NEAR(lyapunov_solve(scalar(0.0), scalar(2.0)).P()(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(lyapunov_solve(scalar(0.5), scalar(1.0)).P()(0, 0), 4.0 / 3.0, 1e-12);
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 0.5, 0.2;
  const Matrix P = lyapunov_solve(A, Matrix::Identity(2, 2)).P();
  EXPECT_NEAR(P(0, 0), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(P(1, 1), 25.0 / 24.0, 1e-12);
  EXPECT_NEAR(P(0, 1), 0.0, 1e-15);
}

TEST(Lyapunov, ResidualOnRandomStableMatrices) {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + t % 4;
    Matrix A = random_matrix(rng, n, n);
    const double radius = Eigen::EigenSolver<Matrix>(A).eigenvalues().cwiseAbs().maxCoeff();
    A *= 0.95 / std::max(radius, 1e-3);
    const Matrix Q = Matrix::Identity(n, n);
    const Matrix P = lyapunov_solve(A, Q).P();
    EXPECT_LE((A.transpose() * P * A - P + Q).cwiseAbs().maxCoeff(), 1e-10 * P.cwiseAbs().maxCoeff());
  }
}

TEST(Lyapunov, UnstableFails) {
  EXPECT_THROW(lyapunov_solve(scalar(1.5), scalar(1.0)), NoConvergence);
}

TEST(DecreaseQuadratic, ExpandsVOfNextState) {
  const PlantModel m = integrator_chain(2, 0.1, 1.0);
  Matrix P(2, 2);
  P << 2.0, 0.3, 0.3, 1.0;
  const QuadraticCLF V(P);
  const Vector x = vec({0.4, -0.2});
  const DecreaseQuadratic d = decrease_quadratic(V, m, x);
  for (double u : {-1.0, -0.3, 0.0, 0.8}) {
    const Vector uu = Vector::Constant(1, u);
    const double direct = V.evaluate(step(m, x, uu));
    const double expanded = uu.dot(d.H * uu) + d.q.dot(uu) + d.r0;
    EXPECT_NEAR(direct, expanded, 1e-14);
  }
}

TEST(LocalContraction, LqrCertifiesSmallSet) {
  const PlantModel m = integrator_chain(2, 0.1, 1.0);
  const Linearization lin = linearize(m, Vector::Zero(2), Vector::Zero(1));
  const Matrix I2 = Matrix::Identity(2, 2), I1 = Matrix::Identity(1, 1);
  const QuadraticCLF V = synthesize_dare(lin.A, lin.B, I2, I1);
  const Matrix K = lqr_gain(lin.A, lin.B, I1, V.P());
  const double ratio = max_lqr_decrease_ratio(V, m, K, 1e-4, 300, 1);
  const ContractionReport r = verify_local_contraction(V, m, ConeParams{ratio, 1.0}, 1e-4, 300, 1);
  EXPECT_DOUBLE_EQ(r.feasible_fraction, 1.0);
  EXPECT_EQ(r.samples, 300);
}

TEST(LocalContraction, DeadbeatOnSingleIntegrator) {
  const ContractionReport r = verify_local_contraction(
      QuadraticCLF(scalar(1)), scalar_plant(1.0, 1.0, 1.0), ConeParams{0.0, 1.0}, 1.0, 200, 2);
  EXPECT_DOUBLE_EQ(r.feasible_fraction, 1.0);
}

TEST(LocalContraction, ScalarRegionFraction) {
  // Feasible iff |x| <= 2 on |x| <= 3.
  const ContractionReport r = verify_local_contraction(
      QuadraticCLF(scalar(1)), scalar_plant(1.0, 1.0, 1.0), ConeParams{0.25, 1.0}, 9.0, 3000, 3);
  EXPECT_NEAR(r.feasible_fraction, 2.0 / 3.0, 0.03);
}

TEST(LocalContraction, DeterministicGivenSeed) {
  const auto run = [] {
    return verify_local_contraction(QuadraticCLF(scalar(1)), scalar_plant(1.0, 1.0, 1.0),
                                    ConeParams{0.25, 1.0}, 9.0, 500, 42)
        .feasible;
  };
  EXPECT_EQ(run(), run());
}

TEST(DefaultRho, RoundsUpAndCaps) {
  EXPECT_DOUBLE_EQ(default_rho_from_ratio(0.231), 0.24);
  EXPECT_DOUBLE_EQ(default_rho_from_ratio(0.25), 0.25);
  EXPECT_DOUBLE_EQ(default_rho_from_ratio(0.9995), 0.999);
  EXPECT_DOUBLE_EQ(default_rho_from_ratio(0.0), 0.0);
}

TEST(Sampling, StaysInSublevelSet) {
  Matrix P(2, 2);
  P << 3.0, 1.0, 1.0, 2.0;
  Rng rng(9);
  const auto xs = sample_sublevel_set(P, 0.5, 400, rng);
  ASSERT_EQ(xs.size(), 400u);
  for (const auto& x : xs) EXPECT_LE(x.dot(P * x), 0.5);
}
