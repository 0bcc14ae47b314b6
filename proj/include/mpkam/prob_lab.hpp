#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "mpkam/hamiltonian.hpp"
#include "mpkam/noise_field.hpp"
#include "mpkam/path.hpp"
#include "mpkam/sde.hpp"

namespace mpkam {

enum class TubeNorm {
  /// max over nodes and coordinates of |x_i - phi_i|
  max_component,
  /// max over nodes of the Euclidean node distance
  euclidean,
};

const char* to_string(TubeNorm n);

struct TubeSpec {
  DiscretePath reference;
  double epsilon = 0.0;
  TubeNorm norm = TubeNorm::max_component;
  /// Also reject paths whose Brownian-bridge interpolation between nodes
  /// leaves the tube, removing most of the node-only discretisation bias.
  bool bridge_correction = true;

  void validate() const;
};

struct MCEstimate {
  double p_hat = 0.0;
  double std_err = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t M = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  /// Zero hits: p_hat and std_err are 0 and log p_hat must not be taken.
  bool underflow = false;
};

MCEstimate make_estimate(std::uint64_t hits, std::uint64_t M, std::uint64_t seed, double gamma);

struct TubeMcOptions {
  Scheme scheme = Scheme::euler_maruyama;
  /// Leaving this box counts as a miss.
  std::optional<DomainBox> domain;
};

/// Fraction of cfg.replicates trajectories started at the reference's first
/// node that stay inside the tube. Replicate j uses Brownian stream j.
MCEstimate tube_probability_mc(const HamiltonianSystem& sys, const DiffusionField& field,
                               const TubeSpec& tube, const NoiseConfig& cfg, double T, int N,
                               const TubeMcOptions& options = {});

struct TubeRatioEstimate {
  MCEstimate first;
  MCEstimate second;
  std::uint64_t joint_hits = 0;
  double ratio = 0.0;    // first.p_hat / second.p_hat; 0 when second underflows
  double std_err = 0.0;  // delta method with the common-noise covariance
};

/// Both tubes are tested against the same Brownian ensemble; each trajectory
/// starts at its own reference's first node. References must share the grid.
TubeRatioEstimate tube_ratio_mc(const HamiltonianSystem& sys, const DiffusionField& field,
                                const TubeSpec& first, const TubeSpec& second,
                                const NoiseConfig& cfg, double T, int N,
                                const TubeMcOptions& options = {});

/// Partial sum of P(sup_{[0,T]} |B| <= eps) for scalar Brownian motion.
double small_ball_oracle(double epsilon, double T, int terms = 50);

/// exp(-(S(phi1) - S(phi2)) / 2) from the two OM totals; paths share the grid.
/// For noise intensity gamma pass field.scaled(gamma).
double om_ratio_prediction(const HamiltonianSystem& sys, const DiffusionField& field,
                           const DiscretePath& phi1, const DiscretePath& phi2);

struct LdpPoint {
  double gamma = 0.0;
  MCEstimate estimate;
  bool usable = false;
  double g2logp = 0.0;  // gamma^2 log p_hat
  double lo = 0.0;
  double hi = 0.0;
};

struct LdpCurve {
  std::vector<LdpPoint> points;
  double reference = 0.0;  // minus the rate function of the tube centre
  bool reference_finite = true;
  double epsilon = 0.0;
};

/// Points with fewer hits than this are flagged unusable.
inline constexpr std::uint64_t kMinUsableHits = 30;

/// gamma^2 log p_hat at each gamma (positive, strictly descending) with a
/// one-standard-error delta-method band.
LdpCurve ldp_curve(const HamiltonianSystem& sys, const DiffusionField& field, const TubeSpec& tube,
                   const std::vector<double>& gammas, std::size_t M, std::uint64_t seed, double T,
                   int N, const TubeMcOptions& options = {});

/// `gamma,p_hat,se,g2logp,lo,hi`; unusable points carry nan in the last three.
void write_ldp_csv(std::ostream& out, const LdpCurve& curve);
nlohmann::json ldp_summary(const LdpCurve& curve);
nlohmann::json to_json(const MCEstimate& e);

}  // namespace mpkam
