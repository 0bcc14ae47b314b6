// Acceptance gate: one PASS/FAIL line per criterion, tolerances pinned below.
// Exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mpkam/fields.hpp"
#include "mpkam/kam.hpp"
#include "mpkam/mpp.hpp"
#include "mpkam/om.hpp"
#include "mpkam/prob_lab.hpp"
#include "mpkam/sde.hpp"
#include "mpkam/systems.hpp"
#include "support.hpp"

using namespace mpkam;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

constexpr double kGolden = 1.6180339887498949;

// 1. scaled log of the small-ball series approaches -pi^2/8
Outcome small_ball_limit() {
  constexpr double kTol = 0.003;
  const double eps = 0.1;
  const double v = eps * eps * std::log(small_ball_oracle(eps, 1.0));
  const double err = std::abs(v + std::numbers::pi * std::numbers::pi / 8.0);
  return {err <= kTol, fmt("eps^2 log P = %.6f, |diff| = %.2e (tol %.0e)", v, err, kTol)};
}

// 2. Monte Carlo tube probability for Brownian motion against the series
Outcome mc_vs_series() {
  constexpr double kSigmas = 3.0;
  const auto sys = systems::zero(1);
  const auto field = fields::identity(1);
  TubeSpec tube{DiscretePath::constant(1.0, 500, v2(0.0, 0.0)), 1.0};
  NoiseConfig cfg{1.0, 20240601, 200000};
  const auto e = tube_probability_mc(sys, field, tube, cfg, 1.0, 500);
  const double exact = std::pow(small_ball_oracle(1.0, 1.0), 2);
  const double dev = std::abs(e.p_hat - exact);
  return {dev <= kSigmas * e.std_err,
          fmt("p_hat = %.5f, series = %.5f, |diff| = %.5f, 3 SE = %.5f", e.p_hat, exact, dev,
              kSigmas * e.std_err)};
}

// 3. ratio of tube probabilities for two constant paths under the oscillator
Outcome om_ratio() {
  constexpr double kRelTol = 0.30;
  const auto sys = systems::harmonic();
  const auto field = fields::identity(1);
  const int N = 200;
  TubeSpec a{DiscretePath::constant(1.0, N, v2(0.6, 0.0)), 0.15};
  TubeSpec b{DiscretePath::constant(1.0, N, v2(0.3, 0.0)), 0.15};
  NoiseConfig cfg{1.0, 777, 1000000};
  const auto r = tube_ratio_mc(sys, field, a, b, cfg, 1.0, N);
  const double predicted = om_ratio_prediction(sys, field, a.reference, b.reference);
  const bool defined = r.first.hits > 0 && r.second.hits > 0;
  const double rel = defined ? std::abs(r.ratio / predicted - 1.0) : INFINITY;
  return {defined && rel <= kRelTol,
          fmt("hits %llu / %llu of M = 1e6, ratio = %s, prediction = %.4f (tol 30%%)",
              static_cast<unsigned long long>(r.first.hits), static_cast<unsigned long long>(r.second.hits),
              defined ? fmt("%.4f", r.ratio).c_str() : "undefined", predicted)};
}

// 4. most probable path equals the deterministic flow for Hamiltonian-column fields
Outcome flow_coincidence() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& [sname, sys] : {std::pair{"harmonic", systems::harmonic()}, std::pair{"pendulum", systems::pendulum()}}) {
    for (const auto& [fname, field] :
         {std::pair{"identity", fields::identity(1)}, std::pair{"quadratic", fields::quadratic(0.1)}}) {
      const auto rep = verify_flow_coincidence(sys, field, v2(0.5, 0.5), 1.0, 100);
      ok = ok && rep.pass;
      d << sname << '/' << fname << fmt(": action %.1e dist %.1e div %.1e; ", rep.action, rep.distance,
                                        rep.divergence_term);
    }
  }
  return {ok, d.str()};
}

// 5. analytic action gradient against central differences
Outcome gradient_check() {
  constexpr double kTol = 1e-6;
  constexpr double h = 1e-6;
  testing::Gen gen(5005);
  double worst = 0.0;
  const std::vector<std::pair<HamiltonianSystem, DiffusionField>> fixtures{
      {systems::harmonic(), fields::identity(1)},  {systems::pendulum(), fields::identity(1)},
      {systems::harmonic(), fields::quadratic(0.1)}, {systems::pendulum(), fields::quadratic(0.1)},
      {systems::harmonic(), fields::sqrt_diag()},  {systems::pendulum(), fields::sqrt_diag()}};
  for (const auto& [sys, f] : fixtures) {
    for (int s = 0; s < 20; ++s) {
      auto path = gen.smooth_path(1.0, 16, 2, -0.9, 0.9);
      const Eigen::MatrixXd g = om_gradient(sys, f, path);
      Eigen::MatrixXd fd(path.N() - 1, 2);
      for (int k = 1; k < path.N(); ++k) {
        for (int j = 0; j < 2; ++j) {
          const double keep = path.values(k, j);
          path.values(k, j) = keep + h;
          const double up = om_action(sys, f, path).total;
          path.values(k, j) = keep - h;
          const double down = om_action(sys, f, path).total;
          path.values(k, j) = keep;
          fd(k - 1, j) = (up - down) / (2 * h);
        }
      }
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / scale);
    }
  }
  return {worst <= kTol, fmt("120 paths over 6 fixtures, worst relative error %.2e (tol %.0e)", worst, kTol)};
}

// 6. divergence term vanishes for Hamiltonian-column fields, not otherwise
Outcome divergence_vanishing() {
  constexpr double kZeroTol = 1e-10;
  constexpr double kControl = 0.01;
  testing::Gen gen(6006);
  double worst = 0.0;
  for (const auto& sys : {systems::harmonic(), systems::pendulum()}) {
    for (const auto& f : {fields::identity(1), fields::quadratic(0.1)}) {
      for (int s = 0; s < 100; ++s) {
        const auto path = gen.smooth_path(1.0, 100, 2, -0.95, 0.95);
        worst = std::max(worst, std::abs(om_action(sys, f, path).divergence_term));
      }
    }
  }
  const auto ref = DiscretePath::straight_line(1.0, 100, v2(0.5, 0.5), v2(1.5, 1.0));
  const double control = std::abs(om_action(systems::harmonic(), fields::sqrt_diag(), ref).divergence_term);
  return {worst <= kZeroTol && control >= kControl,
          fmt("worst |div| on 400 paths %.2e (tol %.0e); sqrt control %.4f (need >= %.2f)", worst, kZeroTol,
              control, kControl)};
}

// 7. exact condition verdicts for the three fixtures
Outcome condition_matrix() {
  auto verdicts = [](const DiffusionField& f) {
    const auto box = f.validity_box();
    const Verdict c2 = check_ellipticity(f, box).verdict("C2");
    const Verdict fr = check_frobenius(f, box).verdict("C3-frobenius");
    const Verdict w = check_c3_witness(f).verdict("C3-witness");
    const Verdict c4 = check_hamiltonian_columns(f, box).verdict("C4");
    return std::tuple{c2, fr, w, c4};
  };
  auto s = [](Verdict v) { return std::string(to_string(v)); };
  std::ostringstream d;
  bool ok = true;
  {
    const auto [c2, fr, w, c4] = verdicts(fields::identity(1));
    ok = ok && c2 == Verdict::pass && fr == Verdict::pass && w != Verdict::fail && c4 == Verdict::pass;
    d << "identity C2 " << s(c2) << " C3 " << s(fr) << '/' << s(w) << " C4 " << s(c4) << "; ";
  }
  {
    const auto [c2, fr, w, c4] = verdicts(fields::sqrt_diag());
    ok = ok && fr == Verdict::pass && w != Verdict::fail && c4 == Verdict::fail;
    d << "sqrt C3 " << s(fr) << '/' << s(w) << " C4 " << s(c4) << "; ";
  }
  {
    const auto [c2, fr, w, c4] = verdicts(fields::quadratic(0.1));
    ok = ok && fr == Verdict::fail && c4 == Verdict::pass;
    d << "quadratic C3-frobenius " << s(fr) << " C4 " << s(c4);
  }
  return {ok, d.str()};
}

// 8. strong self-convergence under multiplicative noise; the gate is the
// default scheme, the predictor-corrector figure is reported alongside
double self_convergence_log2(Scheme scheme) {
  const auto sys = systems::harmonic();
  const auto field = fields::quadratic(0.1);
  const Vector x0 = v2(0.5, 0.5);
  SimulationOptions opts;
  opts.scheme = scheme;
  const int reps = 1000;
  const int n_ref = 3200;
  double e1 = 0.0;
  double e2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    // 3200 -> 1600 -> 800 -> 400 -> 200 -> 100 -> 50
    auto noise = sample_brownian(1.0, n_ref, 2, 8008, static_cast<std::uint64_t>(r));
    const Vector ref = integrate_stratonovich(sys, field, x0, noise, 1.0, opts).node(n_ref);
    for (int i = 0; i < 5; ++i) noise = coarsen(noise);
    const Vector x100 = integrate_stratonovich(sys, field, x0, noise, 1.0, opts).node(100);
    noise = coarsen(noise);
    const Vector x50 = integrate_stratonovich(sys, field, x0, noise, 1.0, opts).node(50);
    e1 += (x50 - ref).squaredNorm() / reps;
    e2 += (x100 - ref).squaredNorm() / reps;
  }
  return std::log2(std::sqrt(e1 / e2));
}

Outcome strong_convergence() {
  constexpr double kMinLog2Ratio = 0.75;
  const double em = self_convergence_log2(Scheme::euler_maruyama);
  const double heun = self_convergence_log2(Scheme::stratonovich_heun);
  return {em >= kMinLog2Ratio,
          fmt("RMS terminal error, dt 1/50 vs 1/100, reference 1/3200: log2 ratio %.3f (need >= %.2f); "
              "Heun for comparison %.3f",
              em, kMinLog2Ratio, heun)};
}

// 9. bounded energy error of the symplectic integrator with second-order scaling
Outcome energy_bound() {
  constexpr double kMaxDrift = 5e-3;
  constexpr double kLo = 3.0;
  constexpr double kHi = 5.3;
  const auto sys = systems::harmonic();
  auto drift = [&](int N) {
    const auto path = deterministic_flow(sys, v2(1.0, 0.0), 100.0, N);
    const double h0 = sys.energy(path.node(0));
    double worst = 0.0;
    for (int k = 0; k <= N; ++k) worst = std::max(worst, std::abs(sys.energy(path.node(k)) - h0));
    return worst;
  };
  const double d1 = drift(10000);
  const double d2 = drift(20000);
  return {d1 <= kMaxDrift && d1 / d2 >= kLo && d1 / d2 <= kHi,
          fmt("max drift %.3e (tol %.0e), ratio %.3f (need [%.1f, %.1f])", d1, kMaxDrift, d1 / d2, kLo, kHi)};
}

// 10. Diophantine checker against exhaustive enumeration
Outcome diophantine_oracle() {
  constexpr double kTol = 1e-12;
  testing::Gen gen(1010);
  KAMParams p;
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const Vector w = gen.vector(2, -2.0, 2.0);
    const auto r = diophantine_check(w, p);
    double best = INFINITY;
    for (int a = -30; a <= 30; ++a) {
      for (int b = -30; b <= 30; ++b) {
        const int l1 = std::abs(a) + std::abs(b);
        if (l1 == 0 || l1 > 30) continue;
        best = std::min(best, std::abs(a * w[0] + b * w[1]) * std::pow(l1, p.tau()));
      }
    }
    const int l1 = std::abs(r.worst_k[0]) + std::abs(r.worst_k[1]);
    const double at_k = std::abs(r.worst_k[0] * w[0] + r.worst_k[1] * w[1]) * std::pow(l1, p.tau());
    worst = std::max({worst, std::abs(r.min_value - best), std::abs(at_k - best)});
  }
  const auto r12 = diophantine_check(v2(1.0, 2.0), p);
  const auto r10 = diophantine_check(v2(1.0, 0.0), p);
  const bool resonant = !r12.passes && r12.worst_k == std::vector<int>{2, -1} && !r10.passes &&
                        r10.worst_k == std::vector<int>{0, 1};
  return {worst <= kTol && resonant,
          fmt("worst |min - enumeration| %.2e (tol %.0e); (1,2) at (%d,%d), (1,0) at (%d,%d)", worst, kTol,
              r12.worst_k[0], r12.worst_k[1], r10.worst_k[0], r10.worst_k[1])};
}

// 11. torus persistence trend for the twist map
Outcome persistence_trend() {
  const auto sys = systems::twist2d(0.0);
  std::vector<Vector> actions;
  for (double r : {0.3, 0.4, 0.5, 0.6, 0.7, 0.8}) actions.push_back(r * v2(1.0, kGolden));
  const std::vector<double> etas{0.0, 1e-3, 1e-2, 5e-2, 1e-1};
  const auto rep = torus_persistence_scan(sys, fields::identity(2), etas, actions, 500.0, 10000);
  double err = 0.0;
  for (const auto& row : rep.rows) {
    if (!row.failed) err = std::max(err, row.omega_error.norm());
  }
  bool ok = rep.summary.front().fraction == 1.0;
  std::ostringstream d;
  for (std::size_t i = 0; i < rep.summary.size(); ++i) {
    const auto& s = rep.summary[i];
    if (i > 0) {
      ok = ok && s.fraction <= rep.summary[i - 1].fraction;
      ok = ok && s.mean_drift >= rep.summary[i - 1].mean_drift - 2 * err;
    }
    d << fmt("eta %.0e: survive %.2f drift %.2e; ", s.eta, s.fraction, s.mean_drift);
  }
  d << fmt("estimator error %.1e", err);
  return {ok, d.str()};
}

// 12. large-deviation trend of gamma^2 log P
Outcome ldp_trend() {
  constexpr double kSigmas = 3.0;
  const std::vector<double> gammas{1.0, 0.7, 0.5};
  const double eps = 0.5;
  const int N = 200;
  std::ostringstream d;
  bool ok = true;
  {
    TubeSpec tube{DiscretePath::constant(1.0, N, v2(0.0, 0.0)), eps};
    const auto c = ldp_curve(systems::zero(1), fields::identity(1), tube, gammas, 1000000, 1212, 1.0, N);
    d << "zero H:";
    for (const auto& pt : c.points) {
      const double exact = std::pow(small_ball_oracle(eps / pt.gamma, 1.0), 2);
      const bool hit = std::abs(pt.estimate.p_hat - exact) <= kSigmas * pt.estimate.std_err;
      ok = ok && pt.usable && hit;
      d << fmt(" g=%.1f p=%.3e vs %.3e", pt.gamma, pt.estimate.p_hat, exact);
    }
  }
  {
    TubeSpec tube{DiscretePath::constant(1.0, N, v2(0.5, 0.0)), eps};
    const auto c = ldp_curve(systems::harmonic(), fields::identity(1), tube, gammas, 1000000, 1213, 1.0, N);
    d << fmt("; harmonic (ref %.3f):", c.reference);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const auto& pt = c.points[i];
      ok = ok && pt.usable;
      if (i > 0) {
        const auto& prev = c.points[i - 1];
        ok = ok && pt.g2logp > prev.g2logp &&
             std::abs(pt.g2logp - c.reference) < std::abs(prev.g2logp - c.reference);
      }
      d << fmt(" g=%.1f %.4f", pt.gamma, pt.g2logp);
    }
  }
  return {ok, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"small-ball limit", small_ball_limit},
      {"Monte Carlo vs small-ball series", mc_vs_series},
      {"tube ratio vs OM prediction", om_ratio},
      {"most probable path equals the flow", flow_coincidence},
      {"action gradient vs finite differences", gradient_check},
      {"divergence term vanishing", divergence_vanishing},
      {"condition checker fixture matrix", condition_matrix},
      {"SDE strong self-convergence", strong_convergence},
      {"symplectic energy bound", energy_bound},
      {"Diophantine oracle equivalence", diophantine_oracle},
      {"KAM persistence trend", persistence_trend},
      {"large-deviation trend", ldp_trend},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
