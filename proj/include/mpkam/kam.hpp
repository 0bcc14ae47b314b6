#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpkam/hamiltonian.hpp"
#include "mpkam/noise_field.hpp"

namespace mpkam {

struct FrequencyVector {
  Vector omega;
  Vector estimated_error;
};

/// Rows are samples at t_k = k T / (rows - 1), columns are angle components.
/// Samples may carry arbitrary 2 pi offsets; they are unwrapped first.
FrequencyVector frequency_estimate(const Eigen::MatrixXd& angles, double T);

/// Removes 2 pi jumps column by column. Throws SamplingTooCoarseError when a
/// column advances in both directions with some step above pi/2.
Eigen::MatrixXd unwrap_angles(const Eigen::MatrixXd& angles);

struct KAMParams {
  int n = 2;
  double l = 10.0;   // smoothness exponent
  double nu = 3.0;   // l > 2 nu > 2 n
  double alpha = 1e-2;
  double eta = 0.0;
  int k_max = 30;
  double c = 1.0;    // constant in alpha = c eta^(1/2 - nu/l)

  [[nodiscard]] double tau() const { return nu - 1.0; }
  void validate() const;
};

struct DiophantineResult {
  bool passes = false;
  std::vector<int> worst_k;
  double min_value = 0.0;  // min |omega . k| |k|_1^tau
  double margin = 0.0;     // min_value - alpha
  int k_max = 0;
};

/// Minimum of |omega . k| |k|_1^tau over 0 < |k|_1 <= k_max. Vectors are
/// visited by increasing |k|_1 with the first nonzero entry positive, and the
/// first strict minimum is kept.
DiophantineResult diophantine_check(const Vector& omega, const KAMParams& params);

/// c eta^(1/2 - nu/l).
double alpha_from_eta(double eta, const KAMParams& params);

struct ScanOptions {
  KAMParams params;
  double drift_tol = 1e-3;
  /// Oscillation tolerance as a fraction of |I0|.
  double osc_tol_fraction = 0.05;
  /// Box on which the field's Hamiltonian-column check must pass; defaults
  /// to the field's validity box.
  std::optional<DomainBox> field_box;
};

struct PersistenceRow {
  double eta = 0.0;
  Vector action0;
  Vector omega;
  Vector omega_error;
  double drift = 0.0;  // |omega(eta) - omega(0)|
  double osc = 0.0;    // max_t |I(t) - I0|
  bool survived = false;
  bool failed = false;
  std::string message;
};

struct EtaSummary {
  double eta = 0.0;
  int evaluated = 0;
  int survived = 0;
  int failed = 0;
  double fraction = 0.0;
  double mean_drift = 0.0;
};

struct PersistenceReport {
  std::vector<PersistenceRow> rows;
  std::vector<EtaSummary> summary;
  /// Slope of log(1 - survival fraction) against log eta; nan with fewer
  /// than two usable points.
  double loss_slope = 0.0;
  /// Slope of log(mean drift) against log eta.
  double drift_slope = 0.0;
  double predicted_exponent = 0.0;  // 1/2 - nu/l
  double drift_tol = 0.0;
  double osc_tol_fraction = 0.0;
  int k_max = 0;
};

/// Integrates the chart flow of H0 + eta P from (theta = 0, I0) for each
/// (eta, I0) pair and judges survival by frequency drift and action
/// oscillation.
PersistenceReport torus_persistence_scan(const HamiltonianSystem& sys, const DiffusionField& field,
                                         const std::vector<double>& etas,
                                         const std::vector<Vector>& initial_actions, double T,
                                         int N, const ScanOptions& options = {});

/// `eta,I0_1..,omega_1..,drift,osc,survived`.
void write_persistence_csv(std::ostream& out, const PersistenceReport& report);
nlohmann::json persistence_summary(const PersistenceReport& report);

}  // namespace mpkam
