#include "mpkam/mpp.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "mpkam/errors.hpp"

namespace mpkam {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Interior nodes of a path flattened row-major into one vector.
VectorXd interior(const DiscretePath& p) {
  const int rows = p.N() - 1;
  VectorXd z(rows * p.dim());
  for (int k = 0; k < rows; ++k) {
    for (int j = 0; j < p.dim(); ++j) z[k * p.dim() + j] = p.values(k + 1, j);
  }
  return z;
}

void set_interior(DiscretePath& p, const VectorXd& z) {
  const int rows = p.N() - 1;
  for (int k = 0; k < rows; ++k) {
    for (int j = 0; j < p.dim(); ++j) p.values(k + 1, j) = z[k * p.dim() + j];
  }
}

VectorXd flatten(const MatrixXd& g) {
  VectorXd z(g.size());
  for (int k = 0; k < g.rows(); ++k) {
    for (int j = 0; j < g.cols(); ++j) z[k * g.cols() + j] = g(k, j);
  }
  return z;
}

/// Block-tridiagonal approximation of the action Hessian from the kinetic term
/// sum_k (1/dt) |A_k (x_{k+1} - x_k)|^2 with A_k = sigma^{-1}(m_k).
class KineticPreconditioner {
 public:
  KineticPreconditioner(const HamiltonianSystem& sys, const DiffusionField& field,
                        const DiscretePath& path) {
    const int N = path.N();
    dim_ = path.dim();
    const double scale = 2.0 / path.dt();
    std::vector<Matrix> w(N);
    for (int k = 0; k < N; ++k) {
      const Vector m = 0.5 * (path.node(k) + path.node(k + 1));
      Matrix a;
      try {
        a = sigma_inverse(field, m);
      } catch (const NearSingularityError&) {
        a = Matrix::Identity(dim_, dim_);
      }
      w[k] = scale * a * a;
    }
    (void)sys;
    // block LDL^T on the tridiagonal: diag_k = w_{k-1} + w_k, off = -w_k
    const int rows = N - 1;
    diag_inv_.resize(rows);
    off_.resize(rows);
    for (int i = 0; i < rows; ++i) {
      Matrix d = w[i] + w[i + 1];
      if (i > 0) d -= off_[i - 1] * diag_inv_[i - 1] * off_[i - 1];
      diag_inv_[i] = d.inverse();
      off_[i] = -w[i + 1];
    }
  }

  [[nodiscard]] VectorXd solve(const VectorXd& rhs) const {
    const int rows = static_cast<int>(diag_inv_.size());
    std::vector<Vector> y(rows);
    for (int i = 0; i < rows; ++i) {
      Vector r = rhs.segment(i * dim_, dim_);
      if (i > 0) r -= off_[i - 1] * (diag_inv_[i - 1] * y[i - 1]);
      y[i] = r;
    }
    VectorXd x(rhs.size());
    Vector next;
    for (int i = rows - 1; i >= 0; --i) {
      Vector r = y[i];
      if (i < rows - 1) r -= off_[i] * next;
      next = diag_inv_[i] * r;
      x.segment(i * dim_, dim_) = next;
    }
    return x;
  }

 private:
  int dim_ = 0;
  std::vector<Matrix> diag_inv_;
  std::vector<Matrix> off_;  // symmetric off-diagonal blocks
};

struct Evaluation {
  double value = 0.0;
  VectorXd gradient;
  ActionBreakdown action;
};

}  // namespace

MppResult solve_mpp(const HamiltonianSystem& sys, const DiffusionField& field, const Vector& x0,
                    const Vector& xT, double T, int N, const std::optional<DiscretePath>& init,
                    const MppOptions& options) {
  if (x0.size() != sys.dim() || xT.size() != sys.dim()) {
    throw ContractViolation("endpoints have the wrong dimension");
  }
  if (N < 3) throw ContractViolation("solve_mpp needs N >= 3");
  DiscretePath path = init ? *init : DiscretePath::straight_line(T, N, x0, xT);
  if (path.N() != N || path.dim() != sys.dim() || std::abs(path.T - T) > 1e-12 * T) {
    throw ContractViolation("initial path grid does not match (T, N)");
  }
  if (path.node(0) != x0 || path.node(N) != xT) {
    throw ContractViolation("initial path endpoints differ from (x0, xT)");
  }

  auto evaluate = [&](const VectorXd& z) {
    set_interior(path, z);
    Evaluation e;
    MatrixXd g;
    e.action = om_action_and_gradient(sys, field, path, g);
    e.value = e.action.total;
    e.gradient = flatten(g);
    return e;
  };

  VectorXd z = interior(path);
  Evaluation cur = evaluate(z);
  std::deque<std::pair<VectorXd, VectorXd>> pairs;  // (s, y)
  std::optional<KineticPreconditioner> pre;

  auto apply_h0 = [&](const VectorXd& q) -> VectorXd {
    if (pre) return pre->solve(q);
    if (pairs.empty()) return q;
    const auto& [s, y] = pairs.back();
    return (s.dot(y) / y.dot(y)) * q;
  };

  MppResult result;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const double gnorm = cur.gradient.lpNorm<Eigen::Infinity>();
    if (gnorm <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (options.precondition && (it % 10 == 0)) pre.emplace(sys, field, path);

    // two-loop recursion
    VectorXd q = cur.gradient;
    std::vector<double> alpha(pairs.size());
    for (int i = static_cast<int>(pairs.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = pairs[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    VectorXd dir = apply_h0(q);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& [s, y] = pairs[i];
      const double beta = y.dot(dir) / y.dot(s);
      dir += (alpha[i] - beta) * s;
    }
    dir = -dir;
    double slope = cur.gradient.dot(dir);
    if (!(slope < 0.0)) {
      pairs.clear();
      dir = -apply_h0(cur.gradient);
      slope = cur.gradient.dot(dir);
    }

    // backtracking; near the minimum accept a step that shrinks the
    // directional derivative when the value change is below roundoff
    double step = 1.0;
    bool accepted = false;
    Evaluation trial;
    const double noise = 1e-12 * (1.0 + std::abs(cur.value));
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd zt = z + step * dir;
      try {
        trial = evaluate(zt);
      } catch (const NumericDomainError&) {
        step *= 0.5;
        continue;
      }
      const double new_slope = trial.gradient.dot(dir);
      const bool armijo = trial.value <= cur.value + 1e-4 * step * slope;
      const bool flat = trial.value <= cur.value + noise && std::abs(new_slope) <= 0.9 * std::abs(slope);
      if (std::isfinite(trial.value) && (armijo || flat)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      set_interior(path, z);
      break;
    }
    const VectorXd s = step * dir;
    const VectorXd y = trial.gradient - cur.gradient;
    z += s;
    cur = std::move(trial);
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
  }
  set_interior(path, z);
  result.path = path;
  result.iterations = it;
  result.gradient_norm = cur.gradient.lpNorm<Eigen::Infinity>();
  result.converged = result.gradient_norm <= options.gradient_tolerance;
  result.action = cur.action;
  return result;
}

FlowCoincidenceReport verify_flow_coincidence(const HamiltonianSystem& sys, const DiffusionField& field,
                               const Vector& x0, double T, int N, const MppOptions& options) {
  FlowCoincidenceReport rep;
  const DiscretePath flow = deterministic_flow(sys, x0, T, N);
  DomainBox box{flow.values.colwise().minCoeff().transpose(),
                flow.values.colwise().maxCoeff().transpose()};
  rep.columns_hamiltonian =
      check_hamiltonian_columns(field, box, 1024).verdict("C4") == Verdict::pass;
  if (!rep.columns_hamiltonian) {
    rep.divergence_term = om_action(sys, field, flow).divergence_term;
    rep.status = "skipped: sigma columns are not Hamiltonian on the path box; divergence term "
                 "along the flow is reported";
    return rep;
  }
  const auto mpp = solve_mpp(sys, field, x0, flow.node(N), T, N, std::nullopt, options);
  rep.checked = true;
  rep.converged = mpp.converged;
  rep.iterations = mpp.iterations;
  rep.action = mpp.action.total;
  rep.divergence_term = mpp.action.divergence_term;
  rep.distance = sup_distance(mpp.path, flow);
  rep.pass = rep.converged && rep.action <= FlowCoincidenceReport::kActionTol &&
             rep.distance <= FlowCoincidenceReport::kDistanceTol &&
             std::abs(rep.divergence_term) <= FlowCoincidenceReport::kDivergenceTol;
  if (!rep.converged) {
    rep.status = "solver did not converge";
  } else {
    rep.status = rep.pass ? "minimiser coincides with the deterministic flow"
                          : "minimiser differs from the deterministic flow";
  }
  return rep;
}

}  // namespace mpkam
