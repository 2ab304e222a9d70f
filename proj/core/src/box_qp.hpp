#pragma once

#include "flexclf/model.hpp"

namespace flexclf::detail {

struct BoxQpResult {
  Vector u;
  int iterations = 0;
};

/// minimize 0.5 u'Mu + v'u over lower <= u <= upper, with M symmetric PSD.
///
/// Projected Newton with an Armijo search along the projection arc, followed
/// by an exact solve on the final free set. Scalar problems are solved in
/// closed form.
BoxQpResult solve_box_qp(const Matrix& M, const Vector& v, const Vector& lower,
                         const Vector& upper, double tol);

}  // namespace flexclf::detail
