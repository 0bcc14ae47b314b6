#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpkam/hamiltonian.hpp"

namespace mpkam::systems {

/// H = (q^2 + p^2) / 2. Nearly integrable with H0(I) = I and P = 0.
HamiltonianSystem harmonic();

/// H = p^2 / 2 - cos q.
HamiltonianSystem pendulum();

/// H = 0 on R^{2n}.
HamiltonianSystem zero(int n = 1);

/// H0(I) = (I1^2 + I2^2)/2 with P = eta cos(theta1 + theta2), written in
/// Cartesian coordinates x = (q1, q2, p1, p2) through the oscillator chart.
/// Singular where either action vanishes.
HamiltonianSystem twist2d(double eta);

/// Registered names: harmonic, pendulum, zero, twist2d.
std::vector<std::string> names();

/// Build a registered system; params: `n` for zero, `eta` for twist2d.
HamiltonianSystem make(const std::string& name, const std::map<std::string, double>& params = {});

}  // namespace mpkam::systems
