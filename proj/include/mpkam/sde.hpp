#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "mpkam/hamiltonian.hpp"
#include "mpkam/noise_field.hpp"
#include "mpkam/path.hpp"

namespace mpkam {

/// Independent engine for (seed, stream_id). `purpose` separates auxiliary
/// streams (e.g. bridge-crossing uniforms) from the Brownian increments.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t purpose = 0);

/// Sequential generator of N(0, dt I) increments for one replicate.
class BrownianStream {
 public:
  BrownianStream(double T, int N, int dim, std::uint64_t seed, std::uint64_t stream_id);
  void next(Vector& dw);
  [[nodiscard]] double dt() const { return dt_; }

 private:
  double dt_;
  double scale_;
  int dim_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct BrownianPath {
  double T = 0.0;
  int N = 0;
  int dim = 0;
  Eigen::MatrixXd increments;  // N x dim, row k ~ N(0, (T/N) I)
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

BrownianPath sample_brownian(double T, int N, int dim, std::uint64_t seed, std::uint64_t stream_id);

/// Sum of every two consecutive increments: the same Brownian path on the
/// grid with N/2 steps.
BrownianPath coarsen(const BrownianPath& fine);

struct NoiseConfig {
  double gamma = 1.0;
  std::uint64_t seed = 0;
  std::size_t replicates = 1;

  void validate() const;
};

enum class Scheme {
  /// Euler-Maruyama on the Ito form with drift J grad H + gamma^2 c(x).
  euler_maruyama,
  /// Predictor-corrector on the Stratonovich form.
  stratonovich_heun,
};

struct SimulationOptions {
  Scheme scheme = Scheme::euler_maruyama;
  /// Leaving this box raises DomainExit.
  std::optional<DomainBox> domain;
  double max_dt = 0.25;
};

/// One step of the chosen scheme for dX = J grad H dt + gamma sigma(X) o dW.
class SdeStepper {
 public:
  SdeStepper(const HamiltonianSystem& sys, const DiffusionField& field, double gamma,
             Scheme scheme);
  void step(Vector& x, const Vector& dw, double dt);
  /// sigma(x) at the last pre-step state.
  [[nodiscard]] const Matrix& last_sigma() const { return sigma_; }

 private:
  const HamiltonianSystem& sys_;
  const DiffusionField& field_;
  double gamma_;
  Scheme scheme_;
  Matrix sigma_;
  DerivativeTensor deriv_;
};

/// Strong solution driven by `noise`; path has N + 1 nodes starting at x0.
DiscretePath integrate_stratonovich(const HamiltonianSystem& sys, const DiffusionField& field,
                                    const Vector& x0, const BrownianPath& noise, double gamma,
                                    const SimulationOptions& options = {});

struct TrajectoryOutcome {
  std::size_t replicate = 0;
  std::optional<DiscretePath> path;
  std::optional<std::size_t> exit_step;

  [[nodiscard]] bool exited() const { return exit_step.has_value(); }
};

/// Replicate j is driven by stream j of cfg.seed. Domain exits are returned
/// as tagged outcomes.
std::vector<TrajectoryOutcome> ensemble(const HamiltonianSystem& sys, const DiffusionField& field,
                                        const Vector& x0, double T, int N, const NoiseConfig& cfg,
                                        const SimulationOptions& options = {});

/// Long format: `replicate,t,x1,...,x2n`; exited replicates are skipped.
void write_ensemble_csv(std::ostream& out, const std::vector<TrajectoryOutcome>& outcomes);

}  // namespace mpkam
