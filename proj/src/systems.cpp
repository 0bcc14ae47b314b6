#include "mpkam/systems.hpp"

#include <cmath>

#include "mpkam/errors.hpp"

namespace mpkam::systems {

namespace {

NearlyIntegrable twist_decomposition(double eta) {
  NearlyIntegrable ni;
  ni.n = 2;
  ni.h0 = [](const Vector& i) { return 0.5 * i.squaredNorm(); };
  ni.h0_gradient = [](const Vector& i) { return i; };
  ni.shape = [](const Vector& th, const Vector&) { return std::cos(th[0] + th[1]); };
  ni.shape_grad_theta = [](const Vector& th, const Vector&) {
    const double s = -std::sin(th[0] + th[1]);
    return Vector(Vector::Constant(2, s));
  };
  ni.shape_grad_action = [](const Vector&, const Vector&) { return Vector(Vector::Zero(2)); };
  ni.shape_depends_on_action = false;
  ni.eta = eta;
  return ni;
}

}  // namespace

HamiltonianSystem harmonic() {
  HamiltonianSystem sys(
      "harmonic", 1, [](const Vector& x) { return 0.5 * x.squaredNorm(); },
      [](const Vector& x) { return x; },
      [](const Vector& x) { return Matrix(Matrix::Identity(x.size(), x.size())); });
  NearlyIntegrable ni;
  ni.n = 1;
  ni.h0 = [](const Vector& i) { return i[0]; };
  ni.h0_gradient = [](const Vector&) { return Vector(Vector::Ones(1)); };
  ni.shape = [](const Vector&, const Vector&) { return 0.0; };
  ni.shape_grad_theta = [](const Vector&, const Vector&) { return Vector(Vector::Zero(1)); };
  ni.shape_grad_action = [](const Vector&, const Vector&) { return Vector(Vector::Zero(1)); };
  ni.shape_depends_on_action = false;
  sys.set_separable().set_lipschitz_bound(1.0).set_oscillator_chart().set_nearly_integrable(ni);
  return sys;
}

HamiltonianSystem pendulum() {
  HamiltonianSystem sys(
      "pendulum", 1, [](const Vector& x) { return 0.5 * x[1] * x[1] - std::cos(x[0]); },
      [](const Vector& x) {
        Vector g(2);
        g << std::sin(x[0]), x[1];
        return g;
      },
      [](const Vector& x) {
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = std::cos(x[0]);
        h(1, 1) = 1.0;
        return h;
      });
  sys.set_separable().set_lipschitz_bound(1.0);
  return sys;
}

HamiltonianSystem zero(int n) {
  HamiltonianSystem sys(
      "zero", n, [](const Vector&) { return 0.0; },
      [](const Vector& x) { return Vector(Vector::Zero(x.size())); },
      [](const Vector& x) { return Matrix(Matrix::Zero(x.size(), x.size())); });
  sys.set_separable().set_lipschitz_bound(0.0);
  return sys;
}

HamiltonianSystem twist2d(double eta) {
  if (!(eta >= 0.0)) throw ContractViolation("twist2d: eta must be non-negative");
  auto energy = [eta](const Vector& x) {
    const double i1 = 0.5 * (x[0] * x[0] + x[2] * x[2]);
    const double i2 = 0.5 * (x[1] * x[1] + x[3] * x[3]);
    const double s = std::atan2(x[2], x[0]) + std::atan2(x[3], x[1]);
    return 0.5 * (i1 * i1 + i2 * i2) + eta * std::cos(s);
  };
  auto gradient = [eta](const Vector& x) {
    Vector g(4);
    const double s = std::atan2(x[2], x[0]) + std::atan2(x[3], x[1]);
    const double sn = std::sin(s);
    for (int j = 0; j < 2; ++j) {
      const double q = x[j];
      const double p = x[2 + j];
      const double r2 = q * q + p * p;
      const double action = 0.5 * r2;
      // d theta/dq = -p/r^2, d theta/dp = q/r^2
      g[j] = action * q + eta * sn * p / r2;
      g[2 + j] = action * p - eta * sn * q / r2;
    }
    return g;
  };
  auto hessian = [gradient](const Vector& x) {
    Matrix h = finite_difference_jacobian(gradient, x);
    return Matrix(0.5 * (h + h.transpose()));
  };
  HamiltonianSystem sys("twist2d", 2, energy, gradient, hessian);
  sys.set_oscillator_chart().set_nearly_integrable(twist_decomposition(eta));
  return sys;
}

std::vector<std::string> names() { return {"harmonic", "pendulum", "zero", "twist2d"}; }

HamiltonianSystem make(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "harmonic") return harmonic();
  if (name == "pendulum") return pendulum();
  if (name == "zero") {
    const double n = get("n", 1.0);
    if (n != std::floor(n) || n < 1) throw ContractViolation("zero: n must be a positive integer");
    return zero(static_cast<int>(n));
  }
  if (name == "twist2d") return twist2d(get("eta", 0.0));
  throw ContractViolation("unknown system '" + name + "'");
}

}  // namespace mpkam::systems
