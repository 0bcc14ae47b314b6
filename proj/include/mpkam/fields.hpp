#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpkam/noise_field.hpp"

namespace mpkam::fields {

/// sigma = I on R^{2n}.
DiffusionField identity(int n = 1);

/// Constant symmetric positive definite sigma.
DiffusionField constant(const Matrix& sigma, double half_width = 10.0);

/// sigma = diag(1 + a p^2, 1 + a q^2) on [-1, 1]^2. Hamiltonian columns
/// (H1 = p + a p^3/3, H2 = -(q + a q^3/3)) but non-commuting: the Frobenius
/// test fails away from the axes.
DiffusionField quadratic(double a = 0.1);

/// sigma = diag(sqrt(1 + q^2), sqrt(1 + p^2)) on [-2, 2]^2. Commuting columns
/// with chart witness U(y) = (sinh y1, sinh y2); columns are not Hamiltonian.
DiffusionField sqrt_diag();

/// sigma = diag(q, 1): degenerate on the line q = 0.
DiffusionField degenerate(double lambda = 0.1, double half_width = 1.0);

std::vector<std::string> names();

/// Registered names: identity (n), quadratic (a), sqrt, degenerate (lambda).
DiffusionField make(const std::string& name, const std::map<std::string, double>& params = {});

}  // namespace mpkam::fields
