#include "mpkam/om.hpp"

#include <cmath>

#include "mpkam/errors.hpp"

namespace mpkam {

namespace {

void check_pair(const HamiltonianSystem& sys, const DiffusionField& field,
                const DiscretePath& path, int min_n) {
  if (sys.dim() != field.dim()) throw ContractViolation("system and field dimensions differ");
  if (path.dim() != sys.dim()) throw ContractViolation("path dimension differs from the system");
  if (path.N() < min_n) {
    throw ContractViolation("path needs N >= " + std::to_string(min_n));
  }
  validate(path);
}

LagrangianTerms at_node(const HamiltonianSystem& sys, const DiffusionField& field,
                        const Vector& y, const Vector& ydot, bool with_derivatives, int node) {
  try {
    return om_lagrangian(sys, field, y, ydot, with_derivatives);
  } catch (const NearSingularityError& e) {
    throw e.with_node(node);
  }
}

}  // namespace

LagrangianTerms om_lagrangian(const HamiltonianSystem& sys, const DiffusionField& field,
                              const Vector& y, const Vector& ydot, bool with_derivatives) {
  const int dim = sys.dim();
  const Matrix a = sigma_inverse(field, y);
  const Vector f = symplectic_gradient(sys, y);
  const Vector r = a * (f - ydot);
  DerivativeTensor d;
  field.derivative(y, d);
  const Vector g = divergence_sigma(d);
  const Vector h = a * f;

  LagrangianTerms out;
  out.quadratic = r.squaredNorm();
  out.divergence = g.dot(h);
  if (!with_derivatives) return out;

  const Matrix jac_f = apply_j_rows(sys.hessian(y));
  const Vector u = a * r;
  const Vector ag = a * g;
  const bool has_div = !field.is_constant();
  const Matrix jac_g = has_div ? field.divergence_jacobian(y) : Matrix::Zero(dim, dim);
  out.d_state.resize(dim);
  for (int l = 0; l < dim; ++l) {
    const auto& s = d.slice[l];
    const double dq = 2.0 * (jac_f.col(l).dot(u) - u.dot(s * r));
    const double dd = jac_g.col(l).dot(h) - ag.dot(s * h) + ag.dot(jac_f.col(l));
    out.d_state[l] = dq - dd;
  }
  out.d_velocity = -2.0 * u;
  return out;
}

ActionBreakdown om_action(const HamiltonianSystem& sys, const DiffusionField& field,
                          const DiscretePath& path) {
  check_pair(sys, field, path, 2);
  const double dt = path.dt();
  ActionBreakdown out;
  out.N = path.N();
  for (int k = 0; k < path.N(); ++k) {
    const Vector a = path.node(k);
    const Vector b = path.node(k + 1);
    const auto terms = at_node(sys, field, 0.5 * (a + b), (b - a) / dt, false, k);
    out.quadratic_term += dt * terms.quadratic;
    out.divergence_term += dt * terms.divergence;
  }
  out.total = out.quadratic_term - out.divergence_term;
  return out;
}

RateValue rate_function(const HamiltonianSystem& sys, const DiffusionField& field,
                        const DiscretePath& path, const Vector& x0) {
  if (x0.size() != path.dim()) throw ContractViolation("x0 has the wrong dimension");
  validate(path);
  if (path.node(0) != x0) return {0.0, false};
  const auto action = om_action(sys, field, path);
  if (!std::isfinite(action.quadratic_term)) return {0.0, false};
  return {0.5 * action.quadratic_term, true};
}

ActionBreakdown om_action_and_gradient(const HamiltonianSystem& sys, const DiffusionField& field,
                                       const DiscretePath& path, Eigen::MatrixXd& gradient) {
  check_pair(sys, field, path, 3);
  const int N = path.N();
  const double dt = path.dt();
  gradient.setZero(N - 1, path.dim());
  ActionBreakdown out;
  out.N = N;
  for (int k = 0; k < N; ++k) {
    const Vector a = path.node(k);
    const Vector b = path.node(k + 1);
    const auto t = at_node(sys, field, 0.5 * (a + b), (b - a) / dt, true, k);
    out.quadratic_term += dt * t.quadratic;
    out.divergence_term += dt * t.divergence;
    // d m / d x_k = d m / d x_{k+1} = 1/2, d v / d x_k = -1/dt, d v / d x_{k+1} = 1/dt
    const Vector left = 0.5 * dt * t.d_state - t.d_velocity;
    const Vector right = 0.5 * dt * t.d_state + t.d_velocity;
    if (k >= 1) gradient.row(k - 1) += left.transpose();
    if (k + 1 <= N - 1) gradient.row(k) += right.transpose();
  }
  out.total = out.quadratic_term - out.divergence_term;
  return out;
}

Eigen::MatrixXd om_gradient(const HamiltonianSystem& sys, const DiffusionField& field,
                            const DiscretePath& path) {
  Eigen::MatrixXd g;
  om_action_and_gradient(sys, field, path, g);
  return g;
}

EulerLagrangeResidual euler_lagrange_residual(const HamiltonianSystem& sys,
                                              const DiffusionField& field,
                                              const DiscretePath& path) {
  check_pair(sys, field, path, 3);
  const int N = path.N();
  const double dt = path.dt();
  std::vector<Vector> momentum(N);  // dL/dy' on each interval
  for (int k = 0; k < N; ++k) {
    const Vector a = path.node(k);
    const Vector b = path.node(k + 1);
    momentum[k] = at_node(sys, field, 0.5 * (a + b), (b - a) / dt, true, k).d_velocity;
  }
  EulerLagrangeResidual out;
  out.per_node.reserve(N - 1);
  for (int k = 1; k < N; ++k) {
    const Vector velocity = (path.node(k + 1) - path.node(k - 1)) / (2.0 * dt);
    const auto t = at_node(sys, field, path.node(k), velocity, true, k);
    const double r = (t.d_state - (momentum[k] - momentum[k - 1]) / dt).norm();
    out.per_node.push_back(r);
    out.max = std::max(out.max, r);
  }
  return out;
}

}  // namespace mpkam
