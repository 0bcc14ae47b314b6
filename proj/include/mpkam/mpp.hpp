#pragma once

#include <optional>
#include <string>

#include "mpkam/hamiltonian.hpp"
#include "mpkam/noise_field.hpp"
#include "mpkam/om.hpp"
#include "mpkam/path.hpp"

namespace mpkam {

struct MppOptions {
  /// Stop when the sup-norm of the action gradient falls below this.
  double gradient_tolerance = 1e-8;
  int max_iterations = 10000;
  /// Number of stored correction pairs.
  int memory = 20;
  /// Seed the inverse-Hessian with the block-tridiagonal kinetic part of the
  /// action instead of a scaled identity.
  bool precondition = true;
};

struct MppResult {
  DiscretePath path;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  ActionBreakdown action;
};

/// Minimises the discrete OM action over paths with fixed endpoints by
/// limited-memory BFGS with backtracking. Starts from the straight line
/// unless `init` is given. A non-converged run returns its best iterate.
MppResult solve_mpp(const HamiltonianSystem& sys, const DiffusionField& field, const Vector& x0,
                    const Vector& xT, double T, int N,
                    const std::optional<DiscretePath>& init = std::nullopt,
                    const MppOptions& options = {});

struct FlowCoincidenceReport {
  bool columns_hamiltonian = false;
  bool checked = false;  // coincidence test was run
  bool converged = false;
  bool pass = false;
  double action = 0.0;            // OM total at the minimiser
  double distance = 0.0;          // sup distance minimiser vs deterministic flow
  double divergence_term = 0.0;   // along the minimiser, or the flow path when skipped
  int iterations = 0;
  std::string status;

  static constexpr double kActionTol = 1e-6;
  static constexpr double kDistanceTol = 1e-3;
  static constexpr double kDivergenceTol = 1e-10;
};

/// Checks that the most probable path between x0 and the flow endpoint is the
/// deterministic Hamiltonian trajectory. When the field's columns are not
/// Hamiltonian on the path's bounding box the coincidence test is skipped
/// and the divergence term along the flow is reported instead.
FlowCoincidenceReport verify_flow_coincidence(const HamiltonianSystem& sys, const DiffusionField& field,
                               const Vector& x0, double T, int N, const MppOptions& options = {});

}  // namespace mpkam
