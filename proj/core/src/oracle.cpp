#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "flexclf/error.hpp"
#include "flexclf/solver.hpp"

namespace flexclf {

namespace {

// Lexicographic score: any feasible point beats every infeasible one; among
// feasible points lower objective wins, among infeasible ones lower
// constraint value wins.
struct Candidate {
  Vector u;
  double lambda = 0.0;
  double objective = std::numeric_limits<double>::infinity();
  double constraint = std::numeric_limits<double>::infinity();
  bool feasible = false;
  bool valid = false;

  bool better_than(const Candidate& other) const {
    if (!other.valid) return valid;
    if (feasible != other.feasible) return feasible;
    if (feasible) return objective < other.objective;
    return constraint < other.constraint;
  }
};

// For a fixed u the objective grows with lambda, so the best slack is the
// constraint excess itself.
Candidate evaluate(const OneStepProblem& p, const Vector& u) {
  Candidate c;
  c.u = u;
  c.valid = true;
  c.constraint = p.constraint_value(u);
  const double excess = c.constraint - p.bound;
  if (excess > p.lambda_max) return c;
  c.feasible = true;
  c.lambda = std::max(0.0, excess);
  c.objective = p.objective(u, c.lambda);
  return c;
}

std::vector<double> axis(double lo, double hi, double step) {
  std::vector<double> pts;
  if (hi <= lo) {
    pts.push_back(lo);
    return pts;
  }
  const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  pts.reserve(count + 2);
  for (long long i = 0; i <= count; ++i) pts.push_back(lo + static_cast<double>(i) * step);
  if (pts.back() < hi) pts.push_back(hi);
  return pts;
}

// Minimizes score(t) over [lo, hi]: a full scan at `resolution`, then
// windows of +-3 cells at a tenth of the spacing, re-centered while the
// incumbent sits on the window edge. The scores seen here are unimodal in t
// (the problem is convex), so the window always brackets the minimizer.
template <typename Score>
Candidate zoom_1d(const Score& score, double lo, double hi, double resolution,
                  double final_resolution) {
  Candidate best;
  double best_t = lo;
  auto sweep = [&](double a, double b, double step) {
    const std::vector<double> ts = axis(a, b, step);
    std::size_t best_i = ts.size();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      Candidate c = score(ts[i]);
      if (c.better_than(best)) {
        best = std::move(c);
        best_t = ts[i];
        best_i = i;
      }
    }
    if (best_i == ts.size()) return false;
    return (best_i == 0 && a > lo) || (best_i + 1 == ts.size() && b < hi);
  };

  sweep(lo, hi, resolution);
  double step = resolution;
  while (final_resolution > 0.0 && step > final_resolution) {
    const double fine = std::max(step / 10.0, final_resolution);
    for (int recenter = 0; recenter < 1000; ++recenter) {
      const double a = std::max(lo, best_t - 3.0 * step);
      const double b = std::min(hi, best_t + 3.0 * step);
      if (!sweep(a, b, fine)) break;
    }
    step = fine;
  }
  return best;
}

}  // namespace

SolveResult grid_oracle(const OneStepProblem& p, double resolution,
                        double final_resolution) {
  validate(p);
  if (p.m() > 2) throw ProblemTooLarge("grid oracle supports m <= 2");
  if (!(resolution > 0.0)) throw InvalidParameter("resolution must be > 0");
  const int m = p.m();

  const auto cells = [&](int d) {
    return (p.u_box.upper[d] - p.u_box.lower[d]) / resolution + 1.0;
  };
  if (cells(0) * (m == 2 ? cells(1) : 1.0) > 2e8)
    throw ProblemTooLarge("grid oracle resolution too fine");

  Candidate best;
  if (m == 1) {
    best = zoom_1d([&](double t) { return evaluate(p, Vector::Constant(1, t)); },
                   p.u_box.lower[0], p.u_box.upper[0], resolution, final_resolution);
  } else {
    // Nested search: the inner minimum over u_1 is again convex in u_0.
    best = zoom_1d(
        [&](double t0) {
          return zoom_1d(
              [&](double t1) {
                Vector u(2);
                u << t0, t1;
                return evaluate(p, u);
              },
              p.u_box.lower[1], p.u_box.upper[1], resolution, final_resolution);
        },
        p.u_box.lower[0], p.u_box.upper[0], resolution, final_resolution);
  }

  SolveResult out;
  out.u = best.u;
  if (best.feasible) {
    out.status = SolveStatus::Optimal;
    out.lambda = best.lambda;
    out.objective = best.objective;
  } else {
    out.status = SolveStatus::Infeasible;
    out.lambda = p.lambda_max;
    out.objective = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace flexclf
