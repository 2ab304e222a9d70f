#include "flexclf/model.hpp"

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "flexclf/error.hpp"

namespace flexclf {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

std::string dims(const char* what, Eigen::Index got, Eigen::Index want) {
  std::ostringstream os;
  os << what << " has dimension " << got << ", expected " << want;
  return os.str();
}

}  // namespace

bool InputBox::contains(const Eigen::Ref<const Vector>& u) const {
  if (u.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u[i] >= lower[i] && u[i] <= upper[i])) return false;
  }
  return true;
}

Vector InputBox::clamp(const Eigen::Ref<const Vector>& u) const {
  return u.cwiseMax(lower).cwiseMin(upper);
}

PlantModel::PlantModel(std::string name, int state_dim, int input_dim,
                       DriftMap drift, InputGainMap input_gain,
                       InputBox input_box)
    : name_(std::move(name)),
      n_(state_dim),
      m_(input_dim),
      drift_(std::move(drift)),
      input_gain_(std::move(input_gain)),
      box_(std::move(input_box)) {
  require(n_ >= 1, "state dimension must be >= 1");
  require(m_ >= 1, "input dimension must be >= 1");
  require(drift_ && input_gain_, "plant maps must be set");
  require(box_.lower.size() == m_ && box_.upper.size() == m_,
          "input box dimension must equal input dimension");
  for (int i = 0; i < m_; ++i) {
    require(box_.lower[i] <= box_.upper[i],
            "input box lower bound exceeds upper bound");
  }
}

Vector PlantModel::drift(const Vector& x) const {
  if (x.size() != n_) throw DimensionMismatch(dims("state", x.size(), n_));
  return drift_(x);
}

Matrix PlantModel::input_gain(const Vector& x) const {
  if (x.size() != n_) throw DimensionMismatch(dims("state", x.size(), n_));
  return input_gain_(x);
}

Vector step(const PlantModel& model, const Vector& x, const Vector& u) {
  if (x.size() != model.n())
    throw DimensionMismatch(dims("state", x.size(), model.n()));
  if (u.size() != model.m())
    throw DimensionMismatch(dims("input", u.size(), model.m()));
  if (!model.input_box().contains(u)) {
    std::ostringstream os;
    os << "input (" << u.transpose() << ") outside the box of plant '"
       << model.name() << "'";
    throw InputOutOfBounds(os.str());
  }
  return model.drift(x) + model.input_gain(x) * u;
}

Linearization linearize(const PlantModel& model, const Vector& x_bar,
                        const Vector& u_bar) {
  if (x_bar.size() != model.n())
    throw DimensionMismatch(dims("state", x_bar.size(), model.n()));
  if (u_bar.size() != model.m())
    throw DimensionMismatch(dims("input", u_bar.size(), model.m()));

  // The composed map is evaluated directly so that perturbations of u_bar
  // may leave the input box; only the equilibrium itself must be admissible.
  auto f = [&](const Vector& x, const Vector& u) -> Vector {
    return model.drift(x) + model.input_gain(x) * u;
  };
  const int n = model.n();
  const int m = model.m();
  Linearization lin{Matrix(n, n), Matrix(n, m)};
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x_bar[j]));
    Vector xp = x_bar, xm = x_bar;
    xp[j] += h;
    xm[j] -= h;
    lin.A.col(j) = (f(xp, u_bar) - f(xm, u_bar)) / (xp[j] - xm[j]);
  }
  for (int j = 0; j < m; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(u_bar[j]));
    Vector up = u_bar, um = u_bar;
    up[j] += h;
    um[j] -= h;
    lin.B.col(j) = (f(x_bar, up) - f(x_bar, um)) / (up[j] - um[j]);
  }
  return lin;
}

PlantModel integrator_chain(int n, double Ts, double u_max) {
  require(n >= 1, "integrator_chain: n must be >= 1");
  require(positive_finite(Ts), "integrator_chain: Ts must be > 0");
  require(positive_finite(u_max), "integrator_chain: u_max must be > 0");

  // A[i][j] = Ts^(j-i)/(j-i)!, B[i] = Ts^(n-i)/(n-i)!
  std::vector<double> taylor(n + 1);
  taylor[0] = 1.0;
  for (int k = 1; k <= n; ++k) taylor[k] = taylor[k - 1] * Ts / k;
  Matrix A = Matrix::Zero(n, n);
  Matrix B(n, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) A(i, j) = taylor[j - i];
    B(i, 0) = taylor[n - i];
  }

  InputBox box{Vector::Constant(1, -u_max), Vector::Constant(1, u_max)};
  return PlantModel(
      "integrator_chain", n, 1, [A](const Vector& x) -> Vector { return A * x; },
      [B](const Vector&) -> Matrix { return B; }, std::move(box));
}

PlantModel scalar_plant(double a, double b, double u_max) {
  require(std::isfinite(a) && std::isfinite(b), "scalar: a, b must be finite");
  require(positive_finite(u_max), "scalar: u_max must be > 0");
  InputBox box{Vector::Constant(1, -u_max), Vector::Constant(1, u_max)};
  return PlantModel(
      "scalar", 1, 1, [a](const Vector& x) -> Vector { return a * x; },
      [b](const Vector&) -> Matrix { return Matrix::Constant(1, 1, b); },
      std::move(box));
}

void validate(const BuckBoostParams& p) {
  require(positive_finite(p.V_in), "buck_boost: V_in must be > 0");
  require(positive_finite(p.L), "buck_boost: L must be > 0");
  require(positive_finite(p.C), "buck_boost: C must be > 0");
  require(positive_finite(p.R_load), "buck_boost: R_load must be > 0");
  require(positive_finite(p.Ts), "buck_boost: Ts must be > 0");
  require(p.duty_ref > 0.0 && p.duty_ref < 1.0,
          "buck_boost: duty_ref must lie in (0,1)");
}

void validate(const ActuatorParams& p) {
  require(positive_finite(p.mass), "actuator: mass must be > 0");
  require(positive_finite(p.Ts), "actuator: Ts must be > 0");
  require(positive_finite(p.u_max), "actuator: u_max must be > 0");
  require(std::isfinite(p.damping) && p.damping >= 0.0,
          "actuator: damping must be >= 0");
  require(std::isfinite(p.spring) && p.spring >= 0.0,
          "actuator: spring must be >= 0");
  require(std::isfinite(p.force_gain), "actuator: force_gain must be finite");
}

Equilibrium compute_equilibrium(const BuckBoostParams& p) {
  const double d = p.duty_ref;
  const double v_bar = p.V_in * d / (1.0 - d);
  const double i_bar = v_bar / (p.R_load * (1.0 - d));
  Equilibrium eq;
  eq.x_bar = Vector(2);
  eq.x_bar << i_bar, v_bar;
  eq.u_bar = Vector::Constant(1, d);
  return eq;
}

Vector buck_boost_absolute_step(const BuckBoostParams& p, const Vector& s,
                                double d) {
  const double i = s[0];
  const double v = s[1];
  Vector next(2);
  next[0] = i + (p.Ts / p.L) * (d * p.V_in - (1.0 - d) * v);
  next[1] = v + (p.Ts / p.C) * ((1.0 - d) * i - v / p.R_load);
  return next;
}

PlantModel buck_boost(const BuckBoostParams& params) {
  validate(params);
  const BuckBoostParams p = params;
  const Equilibrium eq = compute_equilibrium(p);
  const Vector x_bar = eq.x_bar;
  const double d_bar = p.duty_ref;

  // Absolute map split as f = g_abs(s) + h_abs(s) d.
  auto h_abs = [p](const Vector& s) -> Matrix {
    Matrix h(2, 1);
    h(0, 0) = p.Ts / p.L * (p.V_in + s[1]);
    h(1, 0) = -p.Ts / p.C * s[0];
    return h;
  };
  auto drift = [p, x_bar, d_bar](const Vector& z) -> Vector {
    const Vector s = x_bar + z;
    return buck_boost_absolute_step(p, s, d_bar) - x_bar;
  };
  auto gain = [h_abs, x_bar](const Vector& z) -> Matrix {
    return h_abs(x_bar + z);
  };
  InputBox box{Vector::Constant(1, -d_bar), Vector::Constant(1, 1.0 - d_bar)};
  return PlantModel("buck_boost", 2, 1, drift, gain, std::move(box));
}

PlantModel actuator(const ActuatorParams& params) {
  validate(params);
  const ActuatorParams p = params;
  Matrix A(2, 2);
  A << 1.0, p.Ts, -p.Ts * p.spring / p.mass, 1.0 - p.Ts * p.damping / p.mass;
  Matrix B(2, 1);
  B << 0.0, p.Ts * p.force_gain / p.mass;
  InputBox box{Vector::Constant(1, -p.u_max), Vector::Constant(1, p.u_max)};
  return PlantModel(
      "actuator", 2, 1, [A](const Vector& x) -> Vector { return A * x; },
      [B](const Vector&) -> Matrix { return B; }, std::move(box));
}

}  // namespace flexclf
