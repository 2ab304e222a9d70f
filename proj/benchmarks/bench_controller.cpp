#include <benchmark/benchmark.h>

#include <vector>

#include "flexclf/controller.hpp"
#include "flexclf/sampling.hpp"

using namespace flexclf;

namespace {

struct Setup {
  PlantModel model;
  FlexibleController flexible;
  ClassicalController classical;
  std::vector<Vector> states;
};

Setup make_setup(PlantModel model, const Matrix& Q, double radius) {
  const int n = model.n(), m = model.m();
  const Linearization lin = linearize(model, Vector::Zero(n), Vector::Zero(m));
  const Matrix R = Matrix::Identity(m, m);
  const QuadraticCLF V = synthesize_dare(lin.A, lin.B, Q, R);
  const ConeParams cone{0.99, 1.0};
  Rng rng(7);
  auto states = sample_sublevel_set(V.P(), radius, 512, rng);
  return Setup{std::move(model),
               FlexibleController{V, cone, R, default_alpha(R), EnvelopeSchedule{radius, 0.9}},
               ClassicalController{V, cone, R}, std::move(states)};
}

const Setup& integrator3() {
  static const Setup s =
      make_setup(integrator_chain(3, 1e-3, 1.0), 1e4 * Matrix::Identity(3, 3), 1.0);
  return s;
}

const Setup& buck() {
  static const Setup s = [] {
    Matrix Q = Matrix::Identity(2, 2);
    Q(0, 0) = 1e4;
    return make_setup(buck_boost(BuckBoostParams{}), Q, 10.0);
  }();
  return s;
}

void BM_FlexibleStep(benchmark::State& state, const Setup& (*setup)()) {
  const Setup& s = setup();
  std::size_t i = 0;
  for (auto _ : state) {
    const int k = static_cast<int>(i % 1000);
    benchmark::DoNotOptimize(flexible_step(s.flexible, s.model, s.states[i++ % s.states.size()], k));
  }
}
BENCHMARK_CAPTURE(BM_FlexibleStep, integrator3, &integrator3);
BENCHMARK_CAPTURE(BM_FlexibleStep, buck_boost, &buck);

void BM_ClassicalStep(benchmark::State& state, const Setup& (*setup)()) {
  const Setup& s = setup();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classical_step(s.classical, s.model, s.states[i++ % s.states.size()]));
  }
}
BENCHMARK_CAPTURE(BM_ClassicalStep, integrator3, &integrator3);
BENCHMARK_CAPTURE(BM_ClassicalStep, buck_boost, &buck);

void BM_SynthesizeDare(benchmark::State& state) {
  const PlantModel model = integrator_chain(static_cast<int>(state.range(0)), 1e-3, 1.0);
  const int n = model.n();
  const Linearization lin = linearize(model, Vector::Zero(n), Vector::Zero(1));
  const Matrix Q = Matrix::Identity(n, n), R = Matrix::Identity(1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_dare(lin.A, lin.B, Q, R));
}
BENCHMARK(BM_SynthesizeDare)->Arg(2)->Arg(4)->Arg(8);

}  // namespace
