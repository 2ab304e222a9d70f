#include "flexclf/sampling.hpp"

#include <cmath>

#include "flexclf/error.hpp"

namespace flexclf {

std::vector<Vector> sample_sublevel_set(const Matrix& P, double radius,
                                        int count, Rng& rng) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw InvalidParameter("sampling radius must be > 0");
  if (count < 1) throw InvalidParameter("sample count must be >= 1");
  const Eigen::Index n = P.rows();
  const Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success)
    throw InvalidParameter("sublevel set matrix is not positive definite");

  // Half-widths of the bounding box: sqrt(radius * (P^-1)_ii).
  const Matrix P_inv = llt.solve(Matrix::Identity(n, n));
  Vector half(n);
  for (Eigen::Index i = 0; i < n; ++i) half[i] = std::sqrt(radius * P_inv(i, i));

  std::vector<Vector> out;
  out.reserve(count);
  const long long max_draws = 10000LL * count + 1000;
  Vector x(n);
  for (long long draw = 0; draw < max_draws && out.size() < static_cast<std::size_t>(count);
       ++draw) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(-half[i], half[i]);
    if (x.dot(P * x) <= radius) out.push_back(x);
  }
  if (out.size() < static_cast<std::size_t>(count))
    throw InvalidParameter("rejection sampling of the sublevel set stalled");
  return out;
}

}  // namespace flexclf
