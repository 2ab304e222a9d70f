#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

namespace flexclf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-channel bounds on the input.
struct InputBox {
  Vector lower;
  Vector upper;

  Eigen::Index size() const { return lower.size(); }
  bool contains(const Eigen::Ref<const Vector>& u) const;
  Vector clamp(const Eigen::Ref<const Vector>& u) const;
};

/// Discrete-time input-affine plant x+ = g(x) + h(x) u.
///
/// Immutable after construction. The maps are expected to be total on the
/// simulation domain.
class PlantModel {
 public:
  using DriftMap = std::function<Vector(const Vector&)>;
  using InputGainMap = std::function<Matrix(const Vector&)>;

  PlantModel(std::string name, int state_dim, int input_dim, DriftMap drift,
             InputGainMap input_gain, InputBox input_box);

  int n() const { return n_; }
  int m() const { return m_; }
  const std::string& name() const { return name_; }
  const InputBox& input_box() const { return box_; }

  /// g(x); throws DimensionMismatch.
  Vector drift(const Vector& x) const;
  /// h(x), an n x m matrix; throws DimensionMismatch.
  Matrix input_gain(const Vector& x) const;

 private:
  std::string name_;
  int n_;
  int m_;
  DriftMap drift_;
  InputGainMap input_gain_;
  InputBox box_;
};

struct Equilibrium {
  Vector x_bar;
  Vector u_bar;
};

struct BuckBoostParams {
  double V_in = 15.0;     // [V]
  double L = 1e-4;        // [H]
  double C = 1e-4;        // [F]
  double R_load = 10.0;   // [Ohm]
  double Ts = 1e-4;       // [s]
  double duty_ref = 0.5;  // in (0, 1)
};

struct ActuatorParams {
  double mass = 0.1;         // [kg]
  double damping = 1.0;      // [N s/m]
  double spring = 100.0;     // [N/m]
  double force_gain = 10.0;  // [N/A]
  double Ts = 1e-4;          // [s]
  double u_max = 1.0;        // [A]
};

struct Linearization {
  Matrix A;
  Matrix B;
};

/// x+ = g(x) + h(x) u. Throws DimensionMismatch, InputOutOfBounds.
Vector step(const PlantModel& model, const Vector& x, const Vector& u);

/// Jacobians of the step map at (x_bar, u_bar) by central differences with
/// step 1e-6 (1 + |component|).
Linearization linearize(const PlantModel& model, const Vector& x_bar,
                        const Vector& u_bar);

/// Exact zero-order-hold discretization of n chained integrators driven by a
/// scalar input bounded by u_max.
PlantModel integrator_chain(int n, double Ts, double u_max);

/// Scalar plant x+ = a x + b u with |u| <= u_max.
PlantModel scalar_plant(double a, double b, double u_max);

/// Forward-Euler averaged Buck-Boost converter in deviation coordinates
/// around the duty_ref equilibrium. State (inductor current, output voltage),
/// input is the duty deviation, limited so that the total duty lies in [0, 1].
PlantModel buck_boost(const BuckBoostParams& params);

/// Forward-Euler mass-spring-damper driven by a current-proportional force.
/// State (position deviation, speed).
PlantModel actuator(const ActuatorParams& params);

/// Absolute-coordinate steady state (i_bar, v_bar) of the converter at
/// duty_ref; u_bar holds the duty.
Equilibrium compute_equilibrium(const BuckBoostParams& params);

/// One forward-Euler step of the converter in absolute coordinates.
Vector buck_boost_absolute_step(const BuckBoostParams& params,
                                const Vector& state, double duty);

void validate(const BuckBoostParams& params);
void validate(const ActuatorParams& params);

}  // namespace flexclf
