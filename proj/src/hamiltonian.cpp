#include "mpkam/hamiltonian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mpkam/errors.hpp"

namespace mpkam {

namespace {

std::string describe(const Vector& x) {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

}  // namespace

HamiltonianSystem::HamiltonianSystem(std::string name, int n, EnergyFn energy,
                                     GradientFn gradient, HessianFn hessian)
    : name_(std::move(name)),
      n_(n),
      energy_(std::move(energy)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {
  if (n_ < 1 || 2 * n_ > kMaxDim) {
    throw ContractViolation("degrees of freedom must be in [1, " + std::to_string(kMaxDim / 2) +
                            "]");
  }
  if (!energy_ || !gradient_ || !hessian_) {
    throw ContractViolation("Hamiltonian needs energy, gradient and Hessian callbacks");
  }
}

HamiltonianSystem HamiltonianSystem::from_energy(std::string name, int n, EnergyFn energy,
                                                 double step) {
  auto gradient = [energy, step](const Vector& x) {
    return finite_difference_gradient(energy, x, step);
  };
  auto hessian = [gradient, step](const Vector& x) {
    Matrix h = finite_difference_jacobian(gradient, x, step);
    return Matrix(0.5 * (h + h.transpose()));
  };
  return {std::move(name), n, std::move(energy), gradient, hessian};
}

void HamiltonianSystem::check_dim(const Vector& x) const {
  if (x.size() != dim()) {
    throw ContractViolation("phase point has length " + std::to_string(x.size()) + ", expected " +
                            std::to_string(dim()));
  }
}

double HamiltonianSystem::energy(const Vector& x) const {
  check_dim(x);
  return energy_(x);
}

Vector HamiltonianSystem::gradient(const Vector& x) const {
  check_dim(x);
  return gradient_(x);
}

Matrix HamiltonianSystem::hessian(const Vector& x) const {
  check_dim(x);
  return hessian_(x);
}

HamiltonianSystem HamiltonianSystem::shifted(double c) const {
  HamiltonianSystem out = *this;
  out.energy_ = [e = energy_, c](const Vector& x) { return e(x) + c; };
  if (out.nearly_integrable_) {
    out.nearly_integrable_->h0 = [h = out.nearly_integrable_->h0, c](const Vector& i) {
      return h(i) + c;
    };
  }
  return out;
}

Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double step) {
  Vector g(x.size());
  Vector y = x;
  for (int i = 0; i < x.size(); ++i) {
    y[i] = x[i] + step;
    const double fp = f(y);
    y[i] = x[i] - step;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Matrix finite_difference_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                                  double step) {
  Vector y = x;
  Matrix jac;
  for (int i = 0; i < x.size(); ++i) {
    y[i] = x[i] + step;
    const Vector fp = f(y);
    y[i] = x[i] - step;
    const Vector fm = f(y);
    y[i] = x[i];
    if (i == 0) jac.resize(fp.size(), x.size());
    jac.col(i) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

Vector symplectic_gradient(const HamiltonianSystem& sys, const Vector& x) {
  const Vector g = sys.gradient(x);
  if (!g.allFinite()) throw NumericDomainError("non-finite gradient at " + describe(x));
  return apply_j(g);
}

namespace {

void check_flow_args(const HamiltonianSystem& sys, const Vector& x0, double T, int N,
                     const FlowOptions& options) {
  if (x0.size() != sys.dim()) throw ContractViolation("initial point has the wrong dimension");
  if (N < 2) throw ContractViolation("flow needs N >= 2");
  if (!(T > 0.0)) throw ContractViolation("flow horizon must be positive");
  if (options.direction != 1 && options.direction != -1) {
    throw ContractViolation("flow direction must be +1 or -1");
  }
  if (T / N > options.max_dt) {
    throw ContractViolation("time step " + std::to_string(T / N) + " exceeds stability bound " +
                            std::to_string(options.max_dt));
  }
}

}  // namespace

DiscretePath deterministic_flow(const HamiltonianSystem& sys, const Vector& x0, double T, int N,
                                const FlowOptions& options) {
  check_flow_args(sys, x0, T, N, options);
  const int n = sys.n();
  const double h = options.direction * T / N;
  Eigen::MatrixXd values(N + 1, sys.dim());
  values.row(0) = x0.transpose();
  Vector x = x0;

  if (sys.separable() && !options.force_midpoint) {
    // position-momentum splitting: kick(p) half, drift(q) full, kick(p) half
    for (int k = 0; k < N; ++k) {
      Vector g = sys.gradient(x);
      x.tail(n) -= 0.5 * h * g.head(n);
      g = sys.gradient(x);
      x.head(n) += h * g.tail(n);
      g = sys.gradient(x);
      x.tail(n) -= 0.5 * h * g.head(n);
      if (!x.allFinite()) throw IntegrationFailure("Stormer-Verlet produced non-finite state", k);
      values.row(k + 1) = x.transpose();
    }
  } else {
    for (int k = 0; k < N; ++k) {
      Vector y = x + h * symplectic_gradient(sys, x);
      bool converged = false;
      for (int it = 0; it < options.midpoint_max_iterations; ++it) {
        const Vector mid = 0.5 * (x + y);
        const Vector next = x + h * symplectic_gradient(sys, mid);
        const double change = (next - y).lpNorm<Eigen::Infinity>();
        y = next;
        if (change <= options.midpoint_tolerance * (1.0 + y.lpNorm<Eigen::Infinity>())) {
          converged = true;
          break;
        }
      }
      if (!converged) throw IntegrationFailure("implicit midpoint iteration did not converge", k);
      x = y;
      values.row(k + 1) = x.transpose();
    }
  }
  return {T, std::move(values)};
}

DiscretePath explicit_euler_flow(const HamiltonianSystem& sys, const Vector& x0, double T, int N) {
  if (x0.size() != sys.dim()) throw ContractViolation("initial point has the wrong dimension");
  if (N < 1 || !(T > 0.0)) throw ContractViolation("explicit Euler needs N >= 1 and T > 0");
  const double h = T / N;
  Eigen::MatrixXd values(N + 1, sys.dim());
  values.row(0) = x0.transpose();
  Vector x = x0;
  for (int k = 0; k < N; ++k) {
    x += h * symplectic_gradient(sys, x);
    values.row(k + 1) = x.transpose();
  }
  return {T, std::move(values)};
}

ActionAngle to_action_angle(const HamiltonianSystem& sys, const Vector& x) {
  if (!sys.has_oscillator_chart()) {
    throw ContractViolation("system '" + sys.name() + "' declares no action-angle chart");
  }
  if (x.size() != sys.dim()) throw ContractViolation("phase point has the wrong dimension");
  const int n = sys.n();
  ActionAngle out{Vector(n), Vector(n)};
  for (int j = 0; j < n; ++j) {
    const double q = x[j];
    const double p = x[n + j];
    out.action[j] = 0.5 * (q * q + p * p);
    if (out.action[j] == 0.0) {
      throw ChartSingularityError("angle undefined at zero action (oscillator " +
                                  std::to_string(j + 1) + ")");
    }
    out.theta[j] = std::atan2(p, q);
  }
  return out;
}

Vector from_action_angle(const HamiltonianSystem& sys, const Vector& theta, const Vector& action) {
  if (!sys.has_oscillator_chart()) {
    throw ContractViolation("system '" + sys.name() + "' declares no action-angle chart");
  }
  const int n = sys.n();
  if (theta.size() != n || action.size() != n) {
    throw ContractViolation("angle/action vectors must have length n");
  }
  Vector x(2 * n);
  for (int j = 0; j < n; ++j) {
    if (!(action[j] >= 0.0)) throw ContractViolation("action must be non-negative");
    const double r = std::sqrt(2.0 * action[j]);
    x[j] = r * std::cos(theta[j]);
    x[n + j] = r * std::sin(theta[j]);
  }
  return x;
}

HamiltonianSystem chart_system(const NearlyIntegrable& ni, std::optional<double> eta) {
  const int n = ni.n;
  const double amp = eta.value_or(ni.eta);
  auto energy = [ni, amp, n](const Vector& x) {
    const Vector theta = x.head(n);
    const Vector action = x.tail(n);
    return ni.h0(action) + amp * ni.shape(theta, action);
  };
  auto gradient = [ni, amp, n](const Vector& x) {
    const Vector theta = x.head(n);
    const Vector action = x.tail(n);
    Vector g(2 * n);
    g.head(n) = amp * ni.shape_grad_theta(theta, action);
    g.tail(n) = ni.h0_gradient(action) + amp * ni.shape_grad_action(theta, action);
    return g;
  };
  auto hessian = [gradient](const Vector& x) {
    Matrix h = finite_difference_jacobian(gradient, x);
    return Matrix(0.5 * (h + h.transpose()));
  };
  HamiltonianSystem sys("chart", n, energy, gradient, hessian);
  sys.set_separable(!ni.shape_depends_on_action);
  NearlyIntegrable copy = ni;
  copy.eta = amp;
  sys.set_nearly_integrable(std::move(copy));
  return sys;
}

}  // namespace mpkam
