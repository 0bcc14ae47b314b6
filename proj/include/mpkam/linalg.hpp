#pragma once

#include <Eigen/Dense>

namespace mpkam {

/// Largest supported phase-space dimension 2n. Small vectors and matrices
/// live on the stack so that inner integration loops never allocate.
inline constexpr int kMaxDim = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Axis-aligned box in phase space.
struct DomainBox {
  Vector lo;
  Vector hi;

  [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
  [[nodiscard]] bool contains(const Vector& x) const {
    for (int i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    }
    return true;
  }
  static DomainBox cube(int dim, double half_width) {
    return {Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width)};
  }
};

/// Standard symplectic matrix J = [[0, I], [-I, 0]] acting on x = (q, p).
inline Matrix symplectic_matrix(int n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    j(i, n + i) = 1.0;
    j(n + i, i) = -1.0;
  }
  return j;
}

/// J v without forming J: (v_p, -v_q).
inline Vector apply_j(const Vector& v) {
  const auto n = v.size() / 2;
  Vector out(v.size());
  out.head(n) = v.tail(n);
  out.tail(n) = -v.head(n);
  return out;
}

}  // namespace mpkam

namespace mpkam {

/// J M, i.e. apply_j to every column.
inline Matrix apply_j_rows(const Matrix& m) {
  const auto n = m.rows() / 2;
  Matrix out(m.rows(), m.cols());
  out.topRows(n) = m.bottomRows(n);
  out.bottomRows(n) = -m.topRows(n);
  return out;
}

}  // namespace mpkam
