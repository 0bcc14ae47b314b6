#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "mpkam/linalg.hpp"

namespace mpkam {

/// Phase-space values on the uniform grid t_k = k T / N, k = 0..N.
/// Rows are nodes, columns are coordinates (q_1..q_n, p_1..p_n).
struct DiscretePath {
  double T = 0.0;
  Eigen::MatrixXd values;

  DiscretePath() = default;
  DiscretePath(double horizon, Eigen::MatrixXd nodes);

  [[nodiscard]] int N() const { return static_cast<int>(values.rows()) - 1; }
  [[nodiscard]] int dim() const { return static_cast<int>(values.cols()); }
  [[nodiscard]] double dt() const { return T / N(); }
  [[nodiscard]] double time(int k) const { return T * k / N(); }
  [[nodiscard]] Vector node(int k) const { return values.row(k).transpose(); }
  void set_node(int k, const Vector& x) { values.row(k) = x.transpose(); }

  static DiscretePath constant(double T, int N, const Vector& x);
  static DiscretePath straight_line(double T, int N, const Vector& from, const Vector& to);
};

/// Largest Euclidean node distance between two paths on the same grid.
double sup_distance(const DiscretePath& a, const DiscretePath& b);

/// Finite entries and N >= 1.
void validate(const DiscretePath& path);

/// Shortest round-trip decimal representation; byte-stable across runs.
std::string format_double(double v);

/// CSV with header `t,x1,...,x2n`.
void write_csv(std::ostream& out, const DiscretePath& path);
void write_csv(const std::filesystem::path& file, const DiscretePath& path);
DiscretePath read_path_csv(std::istream& in);
DiscretePath read_path_csv(const std::filesystem::path& file);

}  // namespace mpkam
