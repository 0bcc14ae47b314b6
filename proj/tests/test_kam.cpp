#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "mpkam/errors.hpp"
#include "mpkam/fields.hpp"
#include "mpkam/kam.hpp"
#include "mpkam/systems.hpp"
#include "support.hpp"

using namespace mpkam;
using testing::Gen;

namespace {

constexpr double kGolden = 1.6180339887498949;

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Eigen::MatrixXd synthetic(double T, int N, const std::vector<std::function<double(double)>>& comps) {
  Eigen::MatrixXd a(N + 1, static_cast<Eigen::Index>(comps.size()));
  for (int k = 0; k <= N; ++k) {
    for (std::size_t c = 0; c < comps.size(); ++c) a(k, static_cast<Eigen::Index>(c)) = comps[c](T * k / N);
  }
  return a;
}

/// Plain enumeration over the full cube |k_i| <= K, keeping |k|_1 <= K.
double brute_force_min(const Vector& w, double tau, int K) {
  double best = INFINITY;
  for (int a = -K; a <= K; ++a) {
    for (int b = -K; b <= K; ++b) {
      const int l1 = std::abs(a) + std::abs(b);
      if (l1 == 0 || l1 > K) continue;
      best = std::min(best, std::abs(a * w[0] + b * w[1]) * std::pow(l1, tau));
    }
  }
  return best;
}

KAMParams default_params() {
  KAMParams p;
  p.n = 2;
  return p;
}

}  // namespace

TEST_SUITE("kam") {

TEST_CASE("frequency of the harmonic oscillator in its chart") {
  const auto sys = systems::harmonic();
  const auto chart = chart_system(*sys.nearly_integrable());
  Vector x0(2);
  x0 << 0.0, 0.5;
  const auto path = deterministic_flow(chart, x0, 200.0, 20000);
  const auto f = frequency_estimate(path.values.leftCols(1), 200.0);
  CHECK(std::abs(f.omega[0] - 1.0) <= 1e-6);
  CHECK(f.estimated_error[0] <= 1e-6);
}

TEST_CASE("Cartesian harmonic orbit turns clockwise in the atan2 angle") {
  const auto sys = systems::harmonic();
  const auto path = deterministic_flow(sys, v2(1.0, 0.0), 200.0, 20000);
  Eigen::MatrixXd ang(path.N() + 1, 1);
  for (int k = 0; k <= path.N(); ++k) ang(k, 0) = std::atan2(path.values(k, 1), path.values(k, 0));
  const auto f = frequency_estimate(ang, 200.0);
  // Stormer-Verlet turns the oscillator at (2 / dt) asin(dt / 2)
  const double dt = 0.01;
  CHECK(std::abs(std::abs(f.omega[0]) - 2.0 / dt * std::asin(dt / 2.0)) <= 1e-8);
  CHECK(f.omega[0] < 0.0);
}

TEST_CASE("unperturbed twist frequencies equal the action gradient") {
  const auto chart = chart_system(*systems::twist2d(0.0).nearly_integrable());
  Vector x0(4);
  x0 << 0.0, 0.0, 0.3, 0.48;
  const auto path = deterministic_flow(chart, x0, 500.0, 10000);
  const auto f = frequency_estimate(path.values.leftCols(2), 500.0);
  CHECK(std::abs(f.omega[0] - 0.3) <= 1e-6);
  CHECK(std::abs(f.omega[1] - 0.48) <= 1e-6);
}

TEST_CASE("synthetic signal with a wobble") {
  const double T = 400.0;
  const auto a = synthetic(T, 40000, {[](double t) { return 0.7 * t + 0.01 * std::sin(5 * t); }});
  const auto f = frequency_estimate(a, T);
  CHECK(std::abs(f.omega[0] - 0.7) <= 1e-4);
  CHECK(f.estimated_error[0] >= 0.0);
}

TEST_CASE("wrapped input and 2 pi offsets do not change the estimate") {
  const double T = 300.0;
  const auto a = synthetic(T, 6000, {[](double t) { return 0.45 * t + 0.3; }, [](double t) { return -0.8 * t; }});
  const auto ref = frequency_estimate(a, T);
  Eigen::MatrixXd wrapped = a;
  Gen gen(7);
  for (Eigen::Index k = 0; k < wrapped.rows(); ++k) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      wrapped(k, c) = std::remainder(wrapped(k, c), 2 * std::numbers::pi) + 2 * std::numbers::pi * gen.integer(-3, 3);
    }
  }
  const auto f = frequency_estimate(wrapped, T);
  CHECK(std::abs(f.omega[0] - ref.omega[0]) <= 1e-9);
  CHECK(std::abs(f.omega[1] - ref.omega[1]) <= 1e-9);
  CHECK(std::abs(ref.omega[1] + 0.8) <= 1e-9);
}

TEST_CASE("coarse sampling is detected") {
  // steps of +-2 rad alternate, so the direction of travel is ambiguous
  Eigen::MatrixXd a(100, 1);
  for (int k = 0; k < 100; ++k) a(k, 0) = (k % 2 == 0 ? 0.0 : 2.0);
  CHECK_THROWS_AS(frequency_estimate(a, 10.0), SamplingTooCoarseError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Constant(20, 1, NAN);
  CHECK_THROWS_AS(frequency_estimate(bad, 10.0), ContractViolation);
}

TEST_CASE("Diophantine check on the golden frequency") {
  auto p = default_params();
  p.nu = 2.0 + 1e-9;
  p.l = 10.0;
  const Vector w = v2(1.0, kGolden);
  // tau = 1 up to the tiny offset needed for nu > n
  p.alpha = 1e-300;
  const auto probe = diophantine_check(w, p);
  CHECK(probe.min_value > 0.0);
  CHECK(std::abs(probe.min_value - brute_force_min(w, p.tau(), 30)) <= 1e-12);
  p.alpha = 0.5 * probe.min_value;
  const auto r = diophantine_check(w, p);
  CHECK(r.passes);
  CHECK(r.margin > 0.0);
  CHECK(r.k_max == 30);
}

TEST_CASE("resonant frequencies fail at the expected k") {
  auto p = default_params();
  auto r = diophantine_check(v2(1.0, 2.0), p);
  CHECK_FALSE(r.passes);
  CHECK(r.min_value == 0.0);
  CHECK(r.worst_k == std::vector<int>{2, -1});
  r = diophantine_check(v2(1.0, 0.0), p);
  CHECK_FALSE(r.passes);
  CHECK(r.worst_k == std::vector<int>{0, 1});
}

TEST_CASE("Diophantine check agrees with brute-force enumeration") {
  Gen gen(101);
  auto p = default_params();
  for (int s = 0; s < 100; ++s) {
    const Vector w = gen.vector(2, -2.0, 2.0);
    p.nu = gen.uniform(2.1, 4.0);
    p.l = 2 * p.nu + 1;
    const auto r = diophantine_check(w, p);
    CHECK(std::abs(r.min_value - brute_force_min(w, p.tau(), 30)) <= 1e-12);
    // the reported k attains the minimum
    double dot = 0.0;
    int l1 = 0;
    for (int i = 0; i < 2; ++i) {
      dot += r.worst_k[i] * w[i];
      l1 += std::abs(r.worst_k[i]);
    }
    CHECK(std::abs(std::abs(dot) * std::pow(l1, p.tau()) - r.min_value) <= 1e-12);
  }
}

TEST_CASE("Diophantine verdict is invariant under joint scaling") {
  Gen gen(5);
  auto p = default_params();
  for (int s = 0; s < 50; ++s) {
    const Vector w = gen.vector(2, 0.1, 2.0);
    p.alpha = gen.uniform(1e-3, 0.5);
    const bool base = diophantine_check(w, p).passes;
    for (double c : {0.25, 3.0, 17.0}) {
      auto q = p;
      q.alpha = c * p.alpha;
      CHECK(diophantine_check(Vector(c * w), q).passes == base);
    }
  }
}

TEST_CASE("three-dimensional enumeration covers each +-k pair once") {
  auto p = default_params();
  p.n = 3;
  p.nu = 3.5;
  p.l = 8.0;
  p.k_max = 3;
  Vector w(3);
  w << 1.0, std::sqrt(2.0), std::sqrt(3.0);
  const auto r = diophantine_check(w, p);
  double best = INFINITY;
  for (int a = -3; a <= 3; ++a)
    for (int b = -3; b <= 3; ++b)
      for (int c = -3; c <= 3; ++c) {
        const int l1 = std::abs(a) + std::abs(b) + std::abs(c);
        if (l1 == 0 || l1 > 3) continue;
        best = std::min(best, std::abs(a * w[0] + b * w[1] + c * w[2]) * std::pow(l1, p.tau()));
      }
  CHECK(std::abs(r.min_value - best) <= 1e-12);
}

TEST_CASE("alpha from eta") {
  auto p = default_params();
  p.nu = 3.0;
  p.l = 10.0;
  CHECK(alpha_from_eta(1.0, p) == 1.0);
  CHECK(std::abs(alpha_from_eta(1e-2, p) - std::pow(10.0, -0.4)) <= 1e-15);
  CHECK(std::abs(alpha_from_eta(1e-2, p) - 0.3981) <= 1e-4);
  // a smaller nu raises the exponent, which shrinks alpha for eta < 1
  auto wide = p;
  wide.l = 12.0;
  wide.nu = 5.0;
  auto half = wide;
  half.nu = 2.5;
  CHECK(alpha_from_eta(0.01, half) < alpha_from_eta(0.01, wide));
  CHECK(alpha_from_eta(4.0, half) > alpha_from_eta(4.0, wide));
  p.c = 2.0;
  CHECK(alpha_from_eta(0.01, p) == doctest::Approx(2 * std::pow(10.0, -0.4)));
  auto bad = p;
  bad.nu = 5.0;
  CHECK_THROWS_AS(alpha_from_eta(0.1, bad), InvalidParameters);
  CHECK_THROWS_AS(alpha_from_eta(0.0, p), InvalidParameters);
}

TEST_CASE("KAM parameter validation") {
  auto p = default_params();
  CHECK_NOTHROW(p.validate());
  p.nu = 1.5;
  CHECK_THROWS_AS(p.validate(), InvalidParameters);
  p = default_params();
  p.l = 5.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameters);
  p = default_params();
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameters);
  CHECK(default_params().tau() == 2.0);
}

TEST_CASE("persistence scan on the twist map") {
  const auto sys = systems::twist2d(0.0);
  const auto field = fields::identity(2);
  std::vector<Vector> actions;
  for (double r : {0.4, 0.6, 0.8}) actions.push_back(r * v2(1.0, kGolden));
  const std::vector<double> etas{0.0, 1e-3, 1e-2, 1e-1};
  const auto rep = torus_persistence_scan(sys, field, etas, actions, 500.0, 10000);
  REQUIRE(rep.summary.size() == 4);
  REQUIRE(rep.rows.size() == 12);
  CHECK(rep.summary[0].fraction == 1.0);
  for (std::size_t i = 1; i < rep.summary.size(); ++i) CHECK(rep.summary[i].fraction <= rep.summary[i - 1].fraction);
  for (const auto& row : rep.rows) {
    CHECK_FALSE(row.failed);
    if (row.eta == 0.0) {
      CHECK(row.drift <= row.omega_error.maxCoeff());
      CHECK(row.osc <= 1e-12);
    }
    if (row.eta == 1e-3) {
      CHECK(row.drift <= 10 * row.eta);
      // first-order averaging: the mean action shifts by about eta / (I1 + I2)
      const double s0 = row.action0.sum();
      CHECK(row.drift <= 2.5 * row.eta / s0);
    }
  }
  // mean drift grows with eta
  for (std::size_t i = 1; i < rep.summary.size(); ++i) CHECK(rep.summary[i].mean_drift >= rep.summary[i - 1].mean_drift);
  CHECK(std::abs(rep.predicted_exponent - 0.2) <= 1e-15);
  CHECK(std::isfinite(rep.drift_slope));
  std::ostringstream os;
  write_persistence_csv(os, rep);
  CHECK(os.str().rfind("eta,I0_1,I0_2,omega_1,omega_2,drift,osc,survived\n", 0) == 0);
  const auto j = persistence_summary(rep);
  CHECK(j["per_eta"].size() == 4);
}

TEST_CASE("persistence scan adds the eta = 0 baseline when absent") {
  const auto sys = systems::twist2d(0.0);
  const auto rep = torus_persistence_scan(sys, fields::identity(2), {1e-3}, {v2(0.5, 0.5 * kGolden)}, 200.0, 4000);
  CHECK(rep.summary.size() == 1);
  CHECK(rep.rows.size() == 1);
  CHECK(rep.rows[0].drift > 0.0);
}

TEST_CASE("persistence scan preconditions") {
  const auto sys = systems::twist2d(0.0);
  // resonant unperturbed frequency
  CHECK_THROWS_AS(torus_persistence_scan(sys, fields::identity(2), {0.0}, {v2(0.5, 0.5)}, 100.0, 2000), ContractViolation);
  // columns that are not Hamiltonian
  const auto harmonic = systems::harmonic();
  CHECK_THROWS_AS(torus_persistence_scan(harmonic, fields::sqrt_diag(), {0.0}, {[] { Vector v(1); v << 0.5; return v; }()}, 100.0, 2000),
                  ContractViolation);
  CHECK_THROWS_AS(torus_persistence_scan(systems::pendulum(), fields::identity(1), {0.0}, {v2(0.5, 0.5)}, 100.0, 2000),
                  ContractViolation);
}

}  // TEST_SUITE
