#include <doctest.h>

#include <cmath>

#include "mpkam/errors.hpp"
#include "mpkam/fields.hpp"
#include "mpkam/mpp.hpp"
#include "mpkam/systems.hpp"
#include "support.hpp"

using namespace mpkam;
using testing::Gen;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

DiscretePath perturbed(const DiscretePath& base, double amp, std::uint64_t seed) {
  Gen gen(seed);
  DiscretePath p = base;
  for (int k = 1; k < p.N(); ++k)
    for (int j = 0; j < p.dim(); ++j) p.values(k, j) += gen.uniform(-amp, amp);
  return p;
}

/// Largest distance over the nodes the coarse grid shares with the fine one.
double shared_node_distance(const DiscretePath& coarse, const DiscretePath& fine) {
  double d = 0.0;
  for (int k = 0; k <= coarse.N(); ++k) d = std::max(d, (coarse.node(k) - fine.node(2 * k)).norm());
  return d;
}

}  // namespace

TEST_SUITE("mpp") {

TEST_CASE("free particle with identity noise: the minimiser is the straight line") {
  const auto sys = systems::zero(1);
  const auto f = fields::identity(1);
  const Vector a = v2(0.1, -0.3), b = v2(1.2, 0.7);
  const auto line = DiscretePath::straight_line(2.0, 40, a, b);
  const auto r0 = solve_mpp(sys, f, a, b, 2.0, 40);
  CHECK(r0.converged);
  CHECK(sup_distance(r0.path, line) <= 1e-8);
  MppOptions tight;
  tight.gradient_tolerance = 1e-11;
  const auto r1 = solve_mpp(sys, f, a, b, 2.0, 40, perturbed(line, 0.1, 1), tight);
  CHECK(r1.converged);
  CHECK(sup_distance(r1.path, line) <= 1e-8);
}

TEST_CASE("harmonic oscillator: recovered path follows the analytic orbit") {
  const auto sys = systems::harmonic();
  const auto f = fields::identity(1);
  const Vector x0 = v2(0.5, 0.5);
  const double T = 2.0;
  const int N = 200;
  const Vector xT = deterministic_flow(sys, x0, T, N).node(N);
  const auto r = solve_mpp(sys, f, x0, xT, T, N);
  CHECK(r.converged);
  CHECK(r.gradient_norm <= 1e-8);
  CHECK(r.action.total <= 1e-6);
  double worst = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double t = r.path.time(k);
    const Vector exact = v2(x0[0] * std::cos(t) + x0[1] * std::sin(t), x0[1] * std::cos(t) - x0[0] * std::sin(t));
    worst = std::max(worst, (r.path.node(k) - exact).norm());
  }
  CHECK(worst <= 1e-3);
  CHECK(om_gradient(sys, f, r.path).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("perturbed initial guesses converge to the same minimiser") {
  const auto sys = systems::pendulum();
  const auto f = fields::quadratic();
  const Vector x0 = v2(0.2, 0.3), xT = v2(0.5, -0.2);
  const auto base = solve_mpp(sys, f, x0, xT, 1.0, 50);
  REQUIRE(base.converged);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto r = solve_mpp(sys, f, x0, xT, 1.0, 50, perturbed(base.path, 0.1, s));
    CHECK(r.converged);
    CHECK(sup_distance(r.path, base.path) <= 1e-6);
  }
}

TEST_CASE("minimiser is invariant under constant rescaling of the noise") {
  const auto sys = systems::pendulum();
  Matrix s(2, 2);
  s << 1.1, 0.2, 0.2, 0.7;
  const auto f1 = fields::constant(s);
  const auto f2 = f1.scaled(2.5);
  MppOptions tight;
  tight.gradient_tolerance = 1e-11;
  const Vector x0 = v2(0.1, 0.2), xT = v2(0.8, -0.5);
  const auto a = solve_mpp(sys, f1, x0, xT, 1.5, 40, std::nullopt, tight);
  const auto b = solve_mpp(sys, f2, x0, xT, 1.5, 40, std::nullopt, tight);
  CHECK(sup_distance(a.path, b.path) <= 1e-8);
  CHECK(std::abs(b.action.total - a.action.total / (2.5 * 2.5)) <= 1e-10);
}

TEST_CASE("minimisers converge under time-grid refinement") {
  const auto sys = systems::pendulum();
  const auto f = fields::sqrt_diag();
  const Vector x0 = v2(0.2, 0.3), xT = v2(0.6, -0.4);
  const auto r20 = solve_mpp(sys, f, x0, xT, 1.0, 20);
  const auto r40 = solve_mpp(sys, f, x0, xT, 1.0, 40);
  const auto r80 = solve_mpp(sys, f, x0, xT, 1.0, 80);
  const double d1 = shared_node_distance(r20.path, r40.path);
  const double d2 = shared_node_distance(r40.path, r80.path);
  CHECK(d1 <= 0.05);
  CHECK(d2 <= d1 / 1.5);
}

TEST_CASE("Euler-Lagrange residual at the minimiser shrinks with dt") {
  const auto sys = systems::pendulum();
  const auto f = fields::quadratic();
  const Vector x0 = v2(0.2, 0.3), xT = v2(0.5, -0.2);
  const auto a = solve_mpp(sys, f, x0, xT, 1.0, 25);
  const auto b = solve_mpp(sys, f, x0, xT, 1.0, 50);
  const auto c = solve_mpp(sys, f, x0, xT, 1.0, 100);
  const double ra = euler_lagrange_residual(sys, f, a.path).max;
  const double rb = euler_lagrange_residual(sys, f, b.path).max;
  const double rc = euler_lagrange_residual(sys, f, c.path).max;
  CHECK(rb < ra);
  CHECK(rc < rb);
  CHECK(rc <= 0.1);
}

TEST_CASE("flow coincidence verification") {
  const Vector x0 = v2(0.5, 0.3);
  SUBCASE("identity noise, harmonic") {
    const auto rep = verify_flow_coincidence(systems::harmonic(), fields::identity(1), x0, 1.0, 100);
    CHECK(rep.columns_hamiltonian);
    CHECK(rep.checked);
    CHECK(rep.pass);
    CHECK(rep.action <= FlowCoincidenceReport::kActionTol);
    CHECK(rep.distance <= FlowCoincidenceReport::kDistanceTol);
  }
  SUBCASE("quadratic noise, pendulum") {
    const auto rep = verify_flow_coincidence(systems::pendulum(), fields::quadratic(), x0, 1.0, 100);
    CHECK(rep.pass);
    CHECK(std::abs(rep.divergence_term) <= FlowCoincidenceReport::kDivergenceTol);
  }
  SUBCASE("non-Hamiltonian columns skip the coincidence test") {
    const auto rep = verify_flow_coincidence(systems::harmonic(), fields::sqrt_diag(), x0, 1.0, 100);
    CHECK_FALSE(rep.columns_hamiltonian);
    CHECK_FALSE(rep.checked);
    CHECK_FALSE(rep.pass);
    CHECK(std::abs(rep.divergence_term) > 1e-3);
    CHECK(rep.status.find("skipped") != std::string::npos);
  }
}

TEST_CASE("iteration cap returns the best iterate unconverged") {
  const auto sys = systems::pendulum();
  const auto f = fields::quadratic();
  MppOptions few;
  few.max_iterations = 2;
  const Vector x0 = v2(0.2, 0.3), xT = v2(0.5, -0.2);
  const auto r = solve_mpp(sys, f, x0, xT, 1.0, 60, std::nullopt, few);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
  CHECK(r.gradient_norm > few.gradient_tolerance);
  CHECK(r.path.node(0) == x0);
  CHECK(r.path.node(60) == xT);
  const auto line = DiscretePath::straight_line(1.0, 60, x0, xT);
  CHECK(r.action.total < om_action(sys, f, line).total);
}

TEST_CASE("unpreconditioned solve reaches the same minimiser") {
  const auto sys = systems::pendulum();
  const auto f = fields::quadratic();
  MppOptions plain;
  plain.precondition = false;
  const Vector x0 = v2(0.2, 0.3), xT = v2(0.5, -0.2);
  const auto a = solve_mpp(sys, f, x0, xT, 1.0, 30);
  const auto b = solve_mpp(sys, f, x0, xT, 1.0, 30, std::nullopt, plain);
  CHECK(b.converged);
  CHECK(sup_distance(a.path, b.path) <= 1e-6);
}

TEST_CASE("solver argument checks") {
  const auto sys = systems::harmonic();
  const auto f = fields::identity(1);
  CHECK_THROWS_AS(solve_mpp(sys, f, v2(0, 0), v2(1, 1), 1.0, 2), ContractViolation);
  const auto bad = DiscretePath::straight_line(1.0, 10, v2(0, 0), v2(1, 0));
  CHECK_THROWS_AS(solve_mpp(sys, f, v2(0, 0), v2(1, 1), 1.0, 10, bad), ContractViolation);
  CHECK_THROWS_AS(solve_mpp(sys, f, v2(0, 0), v2(1, 1), 1.0, 20, bad), ContractViolation);
}

}  // TEST_SUITE
