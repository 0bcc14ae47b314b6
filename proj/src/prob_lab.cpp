#include "mpkam/prob_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "mpkam/errors.hpp"
#include "mpkam/om.hpp"
#include "mpkam/parallel.hpp"

namespace mpkam {

namespace {

constexpr std::uint32_t kBridgePurpose = 1;

/// Distance of x from the reference node under the tube norm.
double tube_distance(TubeNorm norm, const Vector& d) {
  return norm == TubeNorm::max_component ? d.cwiseAbs().maxCoeff() : d.norm();
}

/// Probability that a Brownian bridge with variance rate s2 from distance a
/// to distance b (both inside the barrier eps) touches the barrier.
double bridge_cross(double eps, double a, double b, double s2dt) {
  if (!(s2dt > 0.0)) return 0.0;
  return std::exp(-2.0 * (eps - a) * (eps - b) / s2dt);
}

/// Exit probability of the interpolating bridge between two in-tube nodes.
double step_exit_probability(const TubeSpec& tube, const Vector& d0, const Vector& d1,
                             const Matrix& gs, double dt) {
  const double eps = tube.epsilon;
  const Matrix cov = gs * gs.transpose();
  if (tube.norm == TubeNorm::max_component) {
    double stay = 1.0;
    for (int i = 0; i < d0.size(); ++i) {
      const double s2dt = cov(i, i) * dt;
      const double up = bridge_cross(eps, d0[i], d1[i], s2dt);
      const double down = bridge_cross(eps, -d0[i], -d1[i], s2dt);
      stay *= std::max(0.0, 1.0 - up - down);
    }
    return 1.0 - stay;
  }
  const double r1 = d1.norm();
  if (r1 == 0.0) return 0.0;
  const Vector u = d1 / r1;
  return bridge_cross(eps, d0.norm(), r1, u.dot(cov * u) * dt);
}

/// Tracks membership of one replicate in one tube.
struct TubeTracker {
  const TubeSpec* tube;
  bool inside = true;
  Vector last;

  void start(const Vector& x) { last = x - tube->reference.node(0); inside = tube_distance(tube->norm, last) <= tube->epsilon; }

  void advance(int k, const Vector& x, const Matrix& gs, double dt, std::mt19937_64& uniforms) {
    if (!inside) return;
    const Vector d = x - tube->reference.node(k);
    if (!(tube_distance(tube->norm, d) <= tube->epsilon)) {
      inside = false;
      return;
    }
    if (tube->bridge_correction) {
      const double p = step_exit_probability(*tube, last, d, gs, dt);
      if (p > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(uniforms) < p) {
        inside = false;
        return;
      }
    }
    last = d;
  }
};

void check_tube_grid(const TubeSpec& tube, double T, int N, int dim) {
  tube.validate();
  if (tube.reference.N() != N || std::abs(tube.reference.T - T) > 1e-12 * T) {
    throw ContractViolation("tube reference grid does not match (T, N)");
  }
  if (tube.reference.dim() != dim) throw ContractViolation("tube reference dimension mismatch");
}

/// Runs every replicate once, recording in `flags[j]` bit t whether tube t
/// held. Tubes with different starting nodes get their own trajectory, all
/// driven by the same Brownian increments.
std::vector<std::uint8_t> run_tubes(const HamiltonianSystem& sys, const DiffusionField& field,
                                    const std::vector<const TubeSpec*>& tubes,
                                    const NoiseConfig& cfg, double T, int N,
                                    const TubeMcOptions& options) {
  cfg.validate();
  if (cfg.replicates < 100) throw ContractViolation("tube estimates need at least 100 replicates");
  if (sys.dim() != field.dim()) throw ContractViolation("system and field dimensions differ");
  for (const auto* t : tubes) check_tube_grid(*t, T, N, sys.dim());
  // trajectory index per tube, shared between tubes with the same start
  std::vector<Vector> starts;
  std::vector<std::size_t> owner(tubes.size());
  for (std::size_t t = 0; t < tubes.size(); ++t) {
    const Vector s = tubes[t]->reference.node(0);
    std::size_t i = 0;
    while (i < starts.size() && starts[i] != s) ++i;
    if (i == starts.size()) starts.push_back(s);
    owner[t] = i;
  }
  std::vector<std::uint8_t> flags(cfg.replicates, 0);
  parallel_for(cfg.replicates, [&](std::size_t j) {
    BrownianStream noise(T, N, sys.dim(), cfg.seed, j);
    // every tube replays the same uniform stream, so its verdict does not
    // depend on which other tubes share the run
    std::vector<std::mt19937_64> uniforms(tubes.size(), make_engine(cfg.seed, j, kBridgePurpose));
    std::vector<SdeStepper> steppers;
    std::vector<Vector> xs = starts;
    std::vector<bool> alive(starts.size(), true);
    steppers.reserve(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) steppers.emplace_back(sys, field, cfg.gamma, options.scheme);
    std::vector<TubeTracker> track;
    track.reserve(tubes.size());
    for (std::size_t t = 0; t < tubes.size(); ++t) {
      track.push_back({tubes[t], true, {}});
      track.back().start(starts[owner[t]]);
    }
    Vector dw;
    const double dt = noise.dt();
    for (int k = 1; k <= N; ++k) {
      // a trajectory is only advanced while one of its tubes still holds
      std::fill(alive.begin(), alive.end(), false);
      bool any = false;
      for (std::size_t t = 0; t < tubes.size(); ++t) {
        if (track[t].inside) alive[owner[t]] = any = true;
      }
      if (!any) break;
      noise.next(dw);
      for (std::size_t i = 0; i < starts.size(); ++i) {
        if (!alive[i]) continue;
        steppers[i].step(xs[i], dw, dt);
        const bool lost = !xs[i].allFinite() || (options.domain && !options.domain->contains(xs[i]));
        const Matrix gs = cfg.gamma * steppers[i].last_sigma();
        for (std::size_t t = 0; t < tubes.size(); ++t) {
          if (owner[t] != i) continue;
          if (lost) {
            track[t].inside = false;
          } else {
            track[t].advance(k, xs[i], gs, dt, uniforms[t]);
          }
        }
      }
    }
    std::uint8_t bits = 0;
    for (std::size_t t = 0; t < track.size(); ++t) {
      if (track[t].inside) bits |= static_cast<std::uint8_t>(1U << t);
    }
    flags[j] = bits;
  });
  return flags;
}

}  // namespace

const char* to_string(TubeNorm n) {
  return n == TubeNorm::max_component ? "max_component" : "euclidean";
}

void TubeSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ContractViolation("tube epsilon must be > 0");
  mpkam::validate(reference);
}

MCEstimate make_estimate(std::uint64_t hits, std::uint64_t M, std::uint64_t seed, double gamma) {
  MCEstimate e;
  e.hits = hits;
  e.M = M;
  e.seed = seed;
  e.gamma = gamma;
  e.p_hat = M == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(M);
  e.std_err = M == 0 ? 0.0 : std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(M));
  e.underflow = hits == 0;
  return e;
}

MCEstimate tube_probability_mc(const HamiltonianSystem& sys, const DiffusionField& field,
                               const TubeSpec& tube, const NoiseConfig& cfg, double T, int N,
                               const TubeMcOptions& options) {
  const auto flags = run_tubes(sys, field, {&tube}, cfg, T, N, options);
  std::uint64_t hits = 0;
  for (auto f : flags) hits += f & 1U;
  return make_estimate(hits, cfg.replicates, cfg.seed, cfg.gamma);
}

TubeRatioEstimate tube_ratio_mc(const HamiltonianSystem& sys, const DiffusionField& field,
                                const TubeSpec& first, const TubeSpec& second,
                                const NoiseConfig& cfg, double T, int N,
                                const TubeMcOptions& options) {
  const auto flags = run_tubes(sys, field, {&first, &second}, cfg, T, N, options);
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
  std::uint64_t h12 = 0;
  for (auto f : flags) {
    h1 += f & 1U;
    h2 += (f >> 1) & 1U;
    h12 += (f & 3U) == 3U;
  }
  TubeRatioEstimate r;
  r.first = make_estimate(h1, cfg.replicates, cfg.seed, cfg.gamma);
  r.second = make_estimate(h2, cfg.replicates, cfg.seed, cfg.gamma);
  r.joint_hits = h12;
  if (h2 == 0) return r;
  const double M = static_cast<double>(cfg.replicates);
  const double p1 = r.first.p_hat;
  const double p2 = r.second.p_hat;
  const double p12 = static_cast<double>(h12) / M;
  r.ratio = p1 / p2;
  if (h1 == 0) return r;
  const double var1 = p1 * (1.0 - p1) / M;
  const double var2 = p2 * (1.0 - p2) / M;
  const double cov = (p12 - p1 * p2) / M;
  const double rel = var1 / (p1 * p1) + var2 / (p2 * p2) - 2.0 * cov / (p1 * p2);
  r.std_err = r.ratio * std::sqrt(std::max(0.0, rel));
  return r;
}

double small_ball_oracle(double epsilon, double T, int terms) {
  if (terms < 1) throw ContractViolation("small_ball_oracle needs terms >= 1");
  if (!(epsilon > 0.0) || !(T > 0.0)) throw ContractViolation("small_ball_oracle needs eps, T > 0");
  const double c = std::numbers::pi * std::numbers::pi * T / (8.0 * epsilon * epsilon);
  double sum = 0.0;
  for (int k = 0; k < terms; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = std::exp(-m * m * c) / m;
    if (term == 0.0) break;
    sum += (k % 2 == 0 ? term : -term);
  }
  return std::max(0.0, 4.0 / std::numbers::pi * sum);
}

double om_ratio_prediction(const HamiltonianSystem& sys, const DiffusionField& field,
                           const DiscretePath& phi1, const DiscretePath& phi2) {
  if (phi1.N() != phi2.N() || phi1.dim() != phi2.dim() || std::abs(phi1.T - phi2.T) > 1e-12 * phi1.T) {
    throw ContractViolation("paths must share their grid");
  }
  const double s1 = om_action(sys, field, phi1).total;
  const double s2 = om_action(sys, field, phi2).total;
  return std::exp(-0.5 * (s1 - s2));
}

LdpCurve ldp_curve(const HamiltonianSystem& sys, const DiffusionField& field, const TubeSpec& tube,
                   const std::vector<double>& gammas, std::size_t M, std::uint64_t seed, double T,
                   int N, const TubeMcOptions& options) {
  if (gammas.empty()) throw ContractViolation("ldp_curve needs at least one gamma");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] > 0.0)) throw ContractViolation("gammas must be positive");
    if (i > 0 && !(gammas[i] < gammas[i - 1])) throw ContractViolation("gammas must be descending");
  }
  LdpCurve curve;
  curve.epsilon = tube.epsilon;
  const RateValue rate = rate_function(sys, field, tube.reference, tube.reference.node(0));
  curve.reference = -rate.value;
  curve.reference_finite = rate.finite;
  bool any = false;
  for (double g : gammas) {
    LdpPoint pt;
    pt.gamma = g;
    pt.estimate = tube_probability_mc(sys, field, tube, NoiseConfig{g, seed, M}, T, N, options);
    pt.usable = pt.estimate.hits >= kMinUsableHits;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (pt.usable) {
      const double g2 = g * g;
      pt.g2logp = g2 * std::log(pt.estimate.p_hat);
      const double band = g2 * pt.estimate.std_err / pt.estimate.p_hat;
      pt.lo = pt.g2logp - band;
      pt.hi = pt.g2logp + band;
      any = true;
    } else {
      pt.g2logp = pt.lo = pt.hi = nan;
    }
    curve.points.push_back(pt);
  }
  if (!any) {
    throw EmptyCurveError("no usable LDP point (fewer than 30 hits everywhere); increase epsilon or M");
  }
  return curve;
}

void write_ldp_csv(std::ostream& out, const LdpCurve& curve) {
  out << "gamma,p_hat,se,g2logp,lo,hi\n";
  for (const auto& p : curve.points) {
    out << format_double(p.gamma) << ',' << format_double(p.estimate.p_hat) << ','
        << format_double(p.estimate.std_err) << ',' << format_double(p.g2logp) << ','
        << format_double(p.lo) << ',' << format_double(p.hi) << '\n';
  }
}

nlohmann::json to_json(const MCEstimate& e) {
  return {{"p_hat", e.p_hat}, {"std_err", e.std_err}, {"hits", e.hits}, {"M", e.M},
          {"seed", e.seed},   {"gamma", e.gamma},     {"underflow", e.underflow}};
}

nlohmann::json ldp_summary(const LdpCurve& curve) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : curve.points) {
    nlohmann::json j = to_json(p.estimate);
    j["usable"] = p.usable;
    if (p.usable) {
      j["g2logp"] = p.g2logp;
      j["lo"] = p.lo;
      j["hi"] = p.hi;
    }
    pts.push_back(j);
  }
  nlohmann::json out{{"epsilon", curve.epsilon}, {"points", pts}};
  if (curve.reference_finite) {
    out["reference"] = curve.reference;
  } else {
    out["reference"] = "-inf";
  }
  return out;
}

}  // namespace mpkam
