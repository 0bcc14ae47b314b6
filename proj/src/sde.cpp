#include "mpkam/sde.hpp"

#include <cmath>
#include <ostream>

#include "mpkam/errors.hpp"
#include "mpkam/parallel.hpp"

namespace mpkam {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32), purpose, 0x6d706b61U};
  return std::mt19937_64(seq);
}

BrownianStream::BrownianStream(double T, int N, int dim, std::uint64_t seed,
                               std::uint64_t stream_id)
    : dt_(T / N), scale_(std::sqrt(T / N)), dim_(dim), engine_(make_engine(seed, stream_id)) {
  if (N < 1 || dim < 1 || !(T > 0.0)) {
    throw ContractViolation("Brownian stream needs N >= 1, dim >= 1, T > 0");
  }
}

void BrownianStream::next(Vector& dw) {
  dw.resize(dim_);
  for (int i = 0; i < dim_; ++i) dw[i] = scale_ * normal_(engine_);
}

BrownianPath sample_brownian(double T, int N, int dim, std::uint64_t seed,
                             std::uint64_t stream_id) {
  if (dim > kMaxDim) throw ContractViolation("Brownian dimension too large");
  BrownianStream stream(T, N, dim, seed, stream_id);
  BrownianPath path{T, N, dim, Eigen::MatrixXd(N, dim), seed, stream_id};
  Vector dw;
  for (int k = 0; k < N; ++k) {
    stream.next(dw);
    path.increments.row(k) = dw.transpose();
  }
  return path;
}

BrownianPath coarsen(const BrownianPath& fine) {
  if (fine.N % 2 != 0) throw ContractViolation("coarsen needs an even step count");
  BrownianPath out = fine;
  out.N = fine.N / 2;
  out.increments.resize(out.N, fine.dim);
  for (int k = 0; k < out.N; ++k) {
    out.increments.row(k) = fine.increments.row(2 * k) + fine.increments.row(2 * k + 1);
  }
  return out;
}

void NoiseConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ContractViolation("gamma must be >= 0");
  if (replicates < 1) throw ContractViolation("need at least one replicate");
}

SdeStepper::SdeStepper(const HamiltonianSystem& sys, const DiffusionField& field, double gamma,
                       Scheme scheme)
    : sys_(sys), field_(field), gamma_(gamma), scheme_(scheme) {
  if (sys.dim() != field.dim()) throw ContractViolation("system and field dimensions differ");
}

void SdeStepper::step(Vector& x, const Vector& dw, double dt) {
  sigma_ = field_.sigma(x);
  const Vector drift = apply_j(sys_.gradient(x));
  if (scheme_ == Scheme::euler_maruyama) {
    Vector inc = drift * dt;
    if (gamma_ != 0.0) {
      if (!field_.is_constant()) {
        field_.derivative(x, deriv_);
        inc += (gamma_ * gamma_ * dt) * ito_drift_correction(sigma_, deriv_);
      }
      inc += gamma_ * (sigma_ * dw);
    }
    x += inc;
  } else {
    const Vector noise = gamma_ * (sigma_ * dw);
    const Vector pred = x + drift * dt + noise;
    const Vector drift_pred = apply_j(sys_.gradient(pred));
    Vector inc = 0.5 * (drift + drift_pred) * dt;
    if (gamma_ != 0.0) inc += 0.5 * (noise + gamma_ * (field_.sigma(pred) * dw));
    x += inc;
  }
}

DiscretePath integrate_stratonovich(const HamiltonianSystem& sys, const DiffusionField& field,
                                    const Vector& x0, const BrownianPath& noise, double gamma,
                                    const SimulationOptions& options) {
  if (noise.dim != sys.dim()) throw ContractViolation("noise dimension must equal 2n");
  if (x0.size() != sys.dim()) throw ContractViolation("initial point has the wrong dimension");
  if (!(gamma >= 0.0)) throw ContractViolation("gamma must be >= 0");
  const double dt = noise.T / noise.N;
  if (dt > options.max_dt) throw ContractViolation("time step exceeds the stability bound");
  SdeStepper stepper(sys, field, gamma, options.scheme);
  Eigen::MatrixXd values(noise.N + 1, sys.dim());
  values.row(0) = x0.transpose();
  Vector x = x0;
  Vector dw(sys.dim());
  for (int k = 0; k < noise.N; ++k) {
    dw = noise.increments.row(k).transpose();
    stepper.step(x, dw, dt);
    if (!x.allFinite()) throw IntegrationFailure("non-finite state", static_cast<std::size_t>(k + 1));
    if (options.domain && !options.domain->contains(x)) {
      throw DomainExit(static_cast<std::size_t>(k + 1));
    }
    values.row(k + 1) = x.transpose();
  }
  return {noise.T, std::move(values)};
}

std::vector<TrajectoryOutcome> ensemble(const HamiltonianSystem& sys, const DiffusionField& field,
                                        const Vector& x0, double T, int N, const NoiseConfig& cfg,
                                        const SimulationOptions& options) {
  cfg.validate();
  std::vector<TrajectoryOutcome> out(cfg.replicates);
  parallel_for(cfg.replicates, [&](std::size_t j) {
    out[j].replicate = j;
    const auto noise = sample_brownian(T, N, sys.dim(), cfg.seed, j);
    try {
      out[j].path = integrate_stratonovich(sys, field, x0, noise, cfg.gamma, options);
    } catch (const DomainExit& e) {
      out[j].exit_step = e.step();
    }
  });
  return out;
}

void write_ensemble_csv(std::ostream& out, const std::vector<TrajectoryOutcome>& outcomes) {
  int dim = 0;
  for (const auto& o : outcomes) {
    if (o.path) {
      dim = o.path->dim();
      break;
    }
  }
  out << "replicate,t";
  for (int j = 0; j < dim; ++j) out << ",x" << (j + 1);
  out << "\n";
  for (const auto& o : outcomes) {
    if (!o.path) continue;
    const auto& p = *o.path;
    for (int k = 0; k <= p.N(); ++k) {
      out << o.replicate << ',' << format_double(p.time(k));
      for (int j = 0; j < dim; ++j) out << ',' << format_double(p.values(k, j));
      out << "\n";
    }
  }
}

}  // namespace mpkam
