#pragma once

#include <string>
#include <vector>

#include "mpkam/hamiltonian.hpp"
#include "mpkam/noise_field.hpp"
#include "mpkam/path.hpp"

namespace mpkam {

/// Onsager-Machlup action split into its two summands:
///   total = int |sigma^{-1}(J grad H - phi')|^2 ds - int div sigma . sigma^{-1} J grad H ds
struct ActionBreakdown {
  double quadratic_term = 0.0;
  double divergence_term = 0.0;
  double total = 0.0;
  int N = 0;
  std::string quadrature = "midpoint";
};

/// Rate function value; `finite == false` encodes +infinity.
struct RateValue {
  double value = 0.0;
  bool finite = true;
};

/// The OM integrand L(y, y') and, optionally, its partial derivatives.
struct LagrangianTerms {
  double quadratic = 0.0;
  double divergence = 0.0;
  Vector d_state;
  Vector d_velocity;

  [[nodiscard]] double value() const { return quadratic - divergence; }
};

LagrangianTerms om_lagrangian(const HamiltonianSystem& sys, const DiffusionField& field,
                              const Vector& y, const Vector& ydot, bool with_derivatives);

/// Midpoint quadrature: state (x_k + x_{k+1})/2, velocity (x_{k+1} - x_k)/dt.
ActionBreakdown om_action(const HamiltonianSystem& sys, const DiffusionField& field,
                          const DiscretePath& path);

/// Half the quadratic term when path(0) == x0 exactly, +infinity otherwise.
RateValue rate_function(const HamiltonianSystem& sys, const DiffusionField& field,
                        const DiscretePath& path, const Vector& x0);

/// Exact gradient of om_action(...).total with respect to the interior nodes
/// 1..N-1 (endpoints fixed). Row k-1 holds the derivative for node k.
Eigen::MatrixXd om_gradient(const HamiltonianSystem& sys, const DiffusionField& field,
                            const DiscretePath& path);

/// Gradient and action in one pass.
ActionBreakdown om_action_and_gradient(const HamiltonianSystem& sys, const DiffusionField& field,
                                       const DiscretePath& path, Eigen::MatrixXd& gradient);

struct EulerLagrangeResidual {
  std::vector<double> per_node;  // interior nodes 1..N-1
  double max = 0.0;
};

/// Node-collocated residual dL/dy(x_k, centred velocity) minus the backward
/// difference of dL/dy' taken on the adjacent intervals.
EulerLagrangeResidual euler_lagrange_residual(const HamiltonianSystem& sys,
                                              const DiffusionField& field,
                                              const DiscretePath& path);

}  // namespace mpkam
