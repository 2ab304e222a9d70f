#include <benchmark/benchmark.h>

#include <vector>

#include "flexclf/sampling.hpp"
#include "flexclf/solver.hpp"

using namespace flexclf;

namespace {

std::vector<OneStepProblem> random_problems(int m, int count) {
  Rng rng(2024 + m);
  std::vector<OneStepProblem> out;
  for (int t = 0; t < count; ++t) {
    OneStepProblem p;
    Matrix G(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) G(i, j) = rng.uniform(-1.0, 1.0);
    p.H = G.transpose() * G;
    p.q = Vector(m);
    for (int i = 0; i < m; ++i) p.q[i] = 3.0 * rng.uniform(-1.0, 1.0);
    p.r0 = rng.uniform(0.0, 5.0);
    p.bound = rng.uniform(0.0, 4.0);
    p.R_u = Matrix::Identity(m, m);
    p.alpha = rng.uniform(1.0, 20.0);
    p.lambda_max = rng.uniform(0.0, 5.0);
    p.u_box = InputBox{Vector::Constant(m, -1.0), Vector::Constant(m, 1.0)};
    out.push_back(std::move(p));
  }
  return out;
}

void BM_SolveOneStep(benchmark::State& state) {
  const auto problems = random_problems(static_cast<int>(state.range(0)), 256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_one_step(problems[i++ % problems.size()]));
  }
}
BENCHMARK(BM_SolveOneStep)->Arg(1)->Arg(2)->Arg(4);

void BM_MinConstraintOverBox(benchmark::State& state) {
  const auto problems = random_problems(static_cast<int>(state.range(0)), 256);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(min_constraint_over_box(problems[i++ % problems.size()]));
  }
}
BENCHMARK(BM_MinConstraintOverBox)->Arg(1)->Arg(2);

}  // namespace
