#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "mpkam/linalg.hpp"
#include "mpkam/path.hpp"

namespace mpkam {

/// Default central-difference step for derived gradients and Hessians.
inline constexpr double kFiniteDifferenceStep = 1e-5;

/// H(theta, I) = H0(I) + eta * shape(theta, I).
///
/// The perturbation is stored as a unit-amplitude shape so that scans over
/// the perturbation size can rebuild the system at any eta.
struct NearlyIntegrable {
  int n = 0;
  std::function<double(const Vector& action)> h0;
  std::function<Vector(const Vector& action)> h0_gradient;
  std::function<double(const Vector& theta, const Vector& action)> shape;
  std::function<Vector(const Vector& theta, const Vector& action)> shape_grad_theta;
  std::function<Vector(const Vector& theta, const Vector& action)> shape_grad_action;
  bool shape_depends_on_action = true;
  double eta = 0.0;

  [[nodiscard]] double perturbation(const Vector& theta, const Vector& action) const {
    return eta * shape(theta, action);
  }
};

/// A Hamiltonian H on R^{2n} with x = (q, p).
///
/// Immutable after construction. Library systems supply analytic gradients
/// and Hessians; `from_energy` derives both by central differences.
class HamiltonianSystem {
 public:
  using EnergyFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  HamiltonianSystem(std::string name, int n, EnergyFn energy, GradientFn gradient,
                    HessianFn hessian);

  /// Gradient and Hessian by central differences with the given step.
  static HamiltonianSystem from_energy(std::string name, int n, EnergyFn energy,
                                       double step = kFiniteDifferenceStep);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int dim() const { return 2 * n_; }

  [[nodiscard]] double energy(const Vector& x) const;
  [[nodiscard]] Vector gradient(const Vector& x) const;
  [[nodiscard]] Matrix hessian(const Vector& x) const;

  /// Declares H = T(p) + V(q); the flow then uses Stormer-Verlet.
  [[nodiscard]] bool separable() const { return separable_; }
  [[nodiscard]] std::optional<double> lipschitz_bound() const { return lipschitz_; }
  [[nodiscard]] const std::optional<NearlyIntegrable>& nearly_integrable() const {
    return nearly_integrable_;
  }
  /// Per-oscillator chart I_j = (q_j^2 + p_j^2)/2, theta_j = atan2(p_j, q_j).
  [[nodiscard]] bool has_oscillator_chart() const { return oscillator_chart_; }

  HamiltonianSystem& set_separable(bool v = true) { separable_ = v; return *this; }
  HamiltonianSystem& set_lipschitz_bound(double l) { lipschitz_ = l; return *this; }
  HamiltonianSystem& set_nearly_integrable(NearlyIntegrable ni) {
    nearly_integrable_ = std::move(ni);
    return *this;
  }
  HamiltonianSystem& set_oscillator_chart(bool v = true) { oscillator_chart_ = v; return *this; }

  /// H + c; identical gradients and flows.
  [[nodiscard]] HamiltonianSystem shifted(double c) const;

 private:
  void check_dim(const Vector& x) const;

  std::string name_;
  int n_;
  EnergyFn energy_;
  GradientFn gradient_;
  HessianFn hessian_;
  bool separable_ = false;
  bool oscillator_chart_ = false;
  std::optional<double> lipschitz_;
  std::optional<NearlyIntegrable> nearly_integrable_;
};

/// Central-difference gradient of a scalar function.
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step = kFiniteDifferenceStep);
/// Central-difference Jacobian of a vector function, symmetrised if requested.
Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                                  double step = kFiniteDifferenceStep);

/// J grad H(x) = (dH/dp, -dH/dq).
Vector symplectic_gradient(const HamiltonianSystem& sys, const Vector& x);

struct FlowOptions {
  /// +1 integrates x' = J grad H, -1 the time-reversed flow (J replaced by -J).
  int direction = +1;
  /// Largest admissible step; larger steps are rejected as unstable.
  double max_dt = 0.25;
  double midpoint_tolerance = 1e-12;
  int midpoint_max_iterations = 50;
  /// Use implicit midpoint even for separable systems.
  bool force_midpoint = false;
};

/// Symplectic solve of x' = J grad H on N uniform steps over [0, T].
/// Stormer-Verlet for separable systems, implicit midpoint otherwise.
DiscretePath deterministic_flow(const HamiltonianSystem& sys, const Vector& x0, double T, int N,
                                const FlowOptions& options = {});

/// Forward Euler on x' = J grad H. Not symplectic; used as the gamma = 0
/// reference for the stochastic schemes.
DiscretePath explicit_euler_flow(const HamiltonianSystem& sys, const Vector& x0, double T, int N);

struct ActionAngle {
  Vector theta;   // in (-pi, pi]
  Vector action;  // >= 0
};

ActionAngle to_action_angle(const HamiltonianSystem& sys, const Vector& x);
Vector from_action_angle(const HamiltonianSystem& sys, const Vector& theta, const Vector& action);

/// The nearly integrable part written as a Hamiltonian on (theta, I), theta
/// in the position slot. Its flow under J is exactly
///   theta' = dH0/dI + dP/dI,  I' = -dP/dtheta.
/// `eta` overrides the stored perturbation size when given.
HamiltonianSystem chart_system(const NearlyIntegrable& ni, std::optional<double> eta = std::nullopt);

}  // namespace mpkam
