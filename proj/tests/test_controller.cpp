#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "flexclf/controller.hpp"
#include "flexclf/error.hpp"
#include "flexclf/sampling.hpp"
#include "test_util.hpp"

using namespace flexclf;
using testutil::vec;

namespace {

const Matrix I1 = Matrix::Identity(1, 1);

ClassicalController scalar_classical() {
  return ClassicalController{QuadraticCLF(I1), ConeParams{0.25, 1.0}, I1};
}

FlexibleController scalar_flexible(double delta, double gamma = 0.5, double alpha = 100.0) {
  return FlexibleController{QuadraticCLF(I1), ConeParams{0.25, 1.0}, I1, alpha,
                            EnvelopeSchedule{delta, gamma}};
}

const PlantModel& scalar() {
  static const PlantModel m = scalar_plant(1.0, 1.0, 1.0);
  return m;
}

}  // namespace

TEST(ClassicalStep, ScalarExamples) {
  ControlDecision d = classical_step(scalar_classical(), scalar(), vec({1.0}));
  ASSERT_EQ(d.status, SolveStatus::Optimal);
  EXPECT_NEAR(d.u[0], -0.5, 1e-8);
  EXPECT_DOUBLE_EQ(d.V_next_bound, 0.25);
  EXPECT_EQ(d.lambda_max, 0.0);

  d = classical_step(scalar_classical(), scalar(), vec({2.0}));
  ASSERT_EQ(d.status, SolveStatus::Optimal);
  EXPECT_NEAR(d.u[0], -1.0, 1e-8);

  d = classical_step(scalar_classical(), scalar(), vec({3.0}));
  EXPECT_EQ(d.status, SolveStatus::Infeasible);
}

TEST(FlexibleStep, SlackUnusedWhenClassicalIsReachable) {
  const ControlDecision d = flexible_step(scalar_flexible(10.0), scalar(), vec({1.0}), 0);
  ASSERT_EQ(d.status, SolveStatus::Optimal);
  EXPECT_NEAR(d.u[0], -0.5, 1e-8);
  EXPECT_EQ(d.lambda, 0.0);
}

TEST(FlexibleStep, SlackFillsTheGap) {
  const ControlDecision d = flexible_step(scalar_flexible(10.0), scalar(), vec({3.0}), 0);
  ASSERT_EQ(d.status, SolveStatus::Optimal);
  EXPECT_NEAR(d.u[0], -1.0, 1e-8);
  EXPECT_NEAR(d.lambda, 1.75, 1e-8);
  EXPECT_NEAR(d.V_next_bound, 2.25 + 1.75, 1e-8);
  EXPECT_EQ(d.lambda_max, 10.0);
}

TEST(FlexibleStep, InfeasibleWhenBudgetTooSmall) {
  const ControlDecision d = flexible_step(scalar_flexible(1.0), scalar(), vec({3.0}), 0);
  EXPECT_EQ(d.status, SolveStatus::Infeasible);
}

TEST(FlexibleStep, DecisionRespectsItsBound) {
  Rng rng(2);
  const FlexibleController ctrl = scalar_flexible(5.0, 0.9, 1.0);
  for (int t = 0; t < 200; ++t) {
    const Vector x = vec({rng.uniform(-4.0, 4.0)});
    const int k = static_cast<int>(rng.next() % 30);
    const ControlDecision d = flexible_step(ctrl, scalar(), x, k);
    if (d.status != SolveStatus::Optimal) continue;
    const double Vn = ctrl.V.evaluate(step(scalar(), x, d.u));
    EXPECT_LE(Vn, d.V_next_bound + 1e-8 * (1.0 + d.V_next_bound));
    EXPECT_LE(d.lambda, envelope(ctrl.envelope, k));
  }
}

TEST(FlexibleStep, ZeroBudgetReducesToClassical) {
  Rng rng(4);
  const PlantModel plant = integrator_chain(2, 0.1, 1.0);
  Matrix P(2, 2);
  P << 3.0, 1.0, 1.0, 2.0;
  const QuadraticCLF V(P);
  const ClassicalController c{V, ConeParams{0.8, 1.0}, I1};
  const FlexibleController f{V, ConeParams{0.8, 1.0}, I1, 50.0, EnvelopeSchedule{0.0, 0.9}};
  int optimal = 0;
  for (int t = 0; t < 300; ++t) {
    const Vector x = vec({rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
    const ControlDecision a = classical_step(c, plant, x);
    const ControlDecision b = flexible_step(f, plant, x, t);
    ASSERT_EQ(a.status, b.status);
    if (a.status != SolveStatus::Optimal) continue;
    ++optimal;
    EXPECT_LE((a.u - b.u).cwiseAbs().maxCoeff(), 1e-6);
  }
  EXPECT_GT(optimal, 0);
}

TEST(FlexibleStep, DominatesClassical) {
  Rng rng(6);
  const ClassicalController c = scalar_classical();
  const FlexibleController f = scalar_flexible(2.0, 0.7);
  for (int t = 0; t < 300; ++t) {
    const Vector x = vec({rng.uniform(-3.0, 3.0)});
    if (classical_step(c, scalar(), x).status != SolveStatus::Optimal) continue;
    for (int k : {0, 1, 5, 40})
      EXPECT_EQ(flexible_step(f, scalar(), x, k).status, SolveStatus::Optimal);
  }
}

TEST(Envelope, GeometricDecay) {
  EXPECT_DOUBLE_EQ(envelope(EnvelopeSchedule{1.0, 0.5}, 0), 1.0);
  EXPECT_DOUBLE_EQ(envelope(EnvelopeSchedule{1.0, 0.5}, 3), 0.125);
  EXPECT_DOUBLE_EQ(envelope(EnvelopeSchedule{0.0, 0.5}, 7), 0.0);
  EXPECT_THROW(envelope(EnvelopeSchedule{1.0, 0.5}, -1), InvalidParameter);
}

TEST(CertifiedBound, Examples) {
  const std::vector<double> zeros(5, 0.0);
  EXPECT_NEAR(certified_bound(2.0, 0.5, zeros, 5), 2.0 * std::pow(0.5, 5), 1e-15);
  const std::vector<double> one = {2.0};
  EXPECT_DOUBLE_EQ(certified_bound(4.0, 0.5, one, 1), 4.0);
  // Equal rates: rho^k V0 + k rho^(k-1) delta.
  std::vector<double> lambdas;
  for (int j = 0; j < 10; ++j) lambdas.push_back(std::pow(0.5, j));
  EXPECT_NEAR(certified_bound(1.0, 0.5, lambdas, 10), std::pow(0.5, 10) + 10 * std::pow(0.5, 9),
              1e-15);
  EXPECT_NEAR(certified_bound(1.0, 0.5, lambdas, 10), 0.0205078125, 1e-12);
  EXPECT_THROW(certified_bound(1.0, 0.5, lambdas, 11), InvalidParameter);
}

TEST(CertifiedBound, EnvelopeConvergenceBound) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const double rho = rng.uniform(0.1, 0.95), gamma = rng.uniform(0.1, 0.95);
    const double V0 = rng.uniform(0.1, 10.0), delta = rng.uniform(0.0, 5.0);
    std::vector<double> lambdas;
    for (int j = 0; j < 60; ++j) lambdas.push_back(delta * std::pow(gamma, j) * rng.uniform());
    const double r = std::max(rho, gamma);
    for (int k = 1; k <= 60; ++k)
      EXPECT_LE(certified_bound(V0, rho, lambdas, k),
                std::pow(r, k - 1) * (V0 + k * delta) * (1.0 + 1e-12));
  }
}

TEST(BestEffortStep, Examples) {
  const QuadraticCLF V(I1);
  ControlDecision d = best_effort_step(V, scalar(), vec({3.0}));
  EXPECT_NEAR(d.u[0], -1.0, 1e-12);
  EXPECT_NEAR(d.V_next_bound, 4.0, 1e-12);
  EXPECT_EQ(d.status, SolveStatus::Infeasible);

  d = best_effort_step(V, scalar(), vec({0.0}));
  EXPECT_NEAR(d.u[0], 0.0, 1e-12);
  EXPECT_NEAR(d.V_next_bound, 0.0, 1e-12);
}

TEST(BestEffortStep, InteriorMinimizerOfLinearPlant) {
  const PlantModel plant = integrator_chain(2, 0.5, 10.0);
  Matrix P(2, 2);
  P << 2.0, 0.5, 0.5, 1.0;
  const QuadraticCLF V(P);
  const Vector x = vec({0.3, -0.2});
  const DecreaseQuadratic q = decrease_quadratic(V, plant, x);
  const Vector expected = -0.5 * q.H.ldlt().solve(q.q);
  ASSERT_TRUE(plant.input_box().contains(expected));
  const ControlDecision d = best_effort_step(V, plant, x);
  EXPECT_NEAR(d.u[0], expected[0], 1e-9);
}

TEST(Controllers, Validation) {
  FlexibleController f = scalar_flexible(1.0);
  f.alpha = 0.0;
  EXPECT_THROW(validate(f), InvalidParameter);
  f = scalar_flexible(-1.0);
  EXPECT_THROW(validate(f), InvalidParameter);
  f = scalar_flexible(1.0, 1.0);
  EXPECT_THROW(validate(f), InvalidParameter);
  ClassicalController c = scalar_classical();
  c.cone.rho = 1.0;
  EXPECT_THROW(validate(c), InvalidParameter);
  EXPECT_DOUBLE_EQ(default_alpha(Matrix::Identity(2, 2) * 3.0), 3000.0);
}
