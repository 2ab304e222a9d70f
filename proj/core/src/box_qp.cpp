#include "box_qp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace flexclf::detail {

namespace {

double quad_value(const Matrix& M, const Vector& v, const Vector& u) {
  return 0.5 * u.dot(M * u) + v.dot(u);
}

Vector project(const Vector& u, const Vector& lower, const Vector& upper) {
  return u.cwiseMax(lower).cwiseMin(upper);
}

BoxQpResult solve_scalar(double M, double v, double lower, double upper) {
  double u;
  if (M > 0.0) {
    u = -v / M;
  } else if (v > 0.0) {
    u = lower;
  } else if (v < 0.0) {
    u = upper;
  } else {
    u = 0.0;
  }
  BoxQpResult out;
  out.u = Vector::Constant(1, std::clamp(u, lower, upper));
  out.iterations = 1;
  return out;
}

std::vector<Eigen::Index> free_set(const Vector& u, const Vector& g,
                                   const Vector& lower, const Vector& upper,
                                   double eps) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const bool at_lower = u[i] <= lower[i] + eps && g[i] > 0.0;
    const bool at_upper = u[i] >= upper[i] - eps && g[i] < 0.0;
    if (!at_lower && !at_upper) free.push_back(i);
  }
  return free;
}

Matrix sub_matrix(const Matrix& M, const std::vector<Eigen::Index>& rows,
                  const std::vector<Eigen::Index>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = M(rows[i], cols[j]);
  return out;
}

}  // namespace

BoxQpResult solve_box_qp(const Matrix& M, const Vector& v, const Vector& lower,
                         const Vector& upper, double tol) {
  const Eigen::Index m = v.size();
  if (m == 1) return solve_scalar(M(0, 0), v[0], lower[0], upper[0]);

  const double scale = 1.0 + v.cwiseAbs().maxCoeff() + M.cwiseAbs().maxCoeff();
  const double reg = 1e-14 * (1.0 + M.diagonal().cwiseAbs().sum());
  const double width = (upper - lower).maxCoeff();

  BoxQpResult out;
  Vector u = project(Vector::Zero(m), lower, upper);
  double fu = quad_value(M, v, u);
  int it = 0;
  for (; it < 200; ++it) {
    const Vector g = M * u + v;
    const double residual = (u - project(u - g, lower, upper)).cwiseAbs().maxCoeff();
    if (residual <= tol * scale * (1.0 + u.cwiseAbs().maxCoeff())) break;

    const double eps = std::min(1e-3 * width, residual);
    const auto free = free_set(u, g, lower, upper, eps);

    Vector d(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double mii = M(i, i);
      d[i] = mii > 0.0 ? -g[i] / mii : -g[i];
    }
    if (!free.empty()) {
      Matrix Mff = sub_matrix(M, free, free);
      Mff.diagonal().array() += reg;
      Vector gf(free.size());
      for (std::size_t k = 0; k < free.size(); ++k) gf[k] = g[free[k]];
      const Vector df = Mff.ldlt().solve(-gf);
      for (std::size_t k = 0; k < free.size(); ++k) d[free[k]] = df[k];
    }

    // Armijo search along the projection arc.
    bool accepted = false;
    double s = 1.0;
    for (int ls = 0; ls < 80; ++ls, s *= 0.5) {
      const Vector trial = project(u + s * d, lower, upper);
      const double predicted = g.dot(u - trial);
      if (!(predicted > 0.0)) continue;
      const double ft = quad_value(M, v, trial);
      if (fu - ft >= 1e-4 * predicted) {
        u = trial;
        fu = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  // Exact solve on the identified free set.
  {
    const Vector g = M * u + v;
    const auto free = free_set(u, g, lower, upper, 0.0);
    std::vector<Eigen::Index> fixed;
    for (Eigen::Index i = 0; i < m; ++i)
      if (std::find(free.begin(), free.end(), i) == free.end()) fixed.push_back(i);
    if (!free.empty()) {
      const Matrix Mff = sub_matrix(M, free, free);
      Eigen::LDLT<Matrix> ldlt(Mff);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
          ldlt.rcond() > 1e-12) {
        Vector rhs(free.size());
        for (std::size_t k = 0; k < free.size(); ++k) {
          double r = -v[free[k]];
          for (auto j : fixed) r -= M(free[k], j) * u[j];
          rhs[k] = r;
        }
        const Vector uf = ldlt.solve(rhs);
        Vector candidate = u;
        bool inside = true;
        for (std::size_t k = 0; k < free.size(); ++k) {
          const auto i = free[k];
          if (!(uf[k] >= lower[i] && uf[k] <= upper[i])) inside = false;
          candidate[i] = uf[k];
        }
        if (inside && quad_value(M, v, candidate) <= fu) u = candidate;
      }
    }
  }

  out.u = u;
  out.iterations = it + 1;
  return out;
}

}  // namespace flexclf::detail
