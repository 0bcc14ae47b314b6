#include "mpkam/path.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "mpkam/errors.hpp"

namespace mpkam {

DiscretePath::DiscretePath(double horizon, Eigen::MatrixXd nodes)
    : T(horizon), values(std::move(nodes)) {}

DiscretePath DiscretePath::constant(double T, int N, const Vector& x) {
  Eigen::MatrixXd v(N + 1, x.size());
  for (int k = 0; k <= N; ++k) v.row(k) = x.transpose();
  return {T, std::move(v)};
}

DiscretePath DiscretePath::straight_line(double T, int N, const Vector& from, const Vector& to) {
  if (from.size() != to.size()) throw ContractViolation("straight_line: endpoint dimensions differ");
  Eigen::MatrixXd v(N + 1, from.size());
  for (int k = 0; k <= N; ++k) {
    const double s = static_cast<double>(k) / N;
    v.row(k) = ((1.0 - s) * from + s * to).transpose();
  }
  v.row(N) = to.transpose();
  return {T, std::move(v)};
}

double sup_distance(const DiscretePath& a, const DiscretePath& b) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw ContractViolation("sup_distance: grids differ");
  }
  return (a.values - b.values).rowwise().norm().maxCoeff();
}

void validate(const DiscretePath& path) {
  if (path.values.rows() < 2) throw ContractViolation("path needs N >= 1");
  if (!(path.T > 0.0)) throw ContractViolation("path horizon T must be positive");
  if (!path.values.allFinite()) throw NumericDomainError("path has non-finite entries");
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return {buf, end};
}

void write_csv(std::ostream& out, const DiscretePath& path) {
  out << "t";
  for (int j = 0; j < path.dim(); ++j) out << ",x" << (j + 1);
  out << "\n";
  for (int k = 0; k <= path.N(); ++k) {
    out << format_double(path.time(k));
    for (int j = 0; j < path.dim(); ++j) out << ',' << format_double(path.values(k, j));
    out << "\n";
  }
}

void write_csv(const std::filesystem::path& file, const DiscretePath& path) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  write_csv(out, path);
}

DiscretePath read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,", 0) != 0) {
    throw ContractViolation("path CSV must start with header t,x1,...");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ContractViolation("path CSV: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ContractViolation("path CSV: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2 || rows.front().size() < 2) throw ContractViolation("path CSV: too few rows");
  const int n_rows = static_cast<int>(rows.size());
  const int dim = static_cast<int>(rows.front().size()) - 1;
  Eigen::MatrixXd v(n_rows, dim);
  for (int k = 0; k < n_rows; ++k) {
    for (int j = 0; j < dim; ++j) v(k, j) = rows[k][j + 1];
  }
  const double t0 = rows.front()[0];
  const double T = rows.back()[0] - t0;
  // the grid must be uniform
  const double dt = T / (n_rows - 1);
  for (int k = 0; k < n_rows; ++k) {
    if (std::abs(rows[k][0] - t0 - k * dt) > 1e-9 * std::max(1.0, T)) {
      throw ContractViolation("path CSV: time grid is not uniform");
    }
  }
  DiscretePath path(T, std::move(v));
  validate(path);
  return path;
}

DiscretePath read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ContractViolation("cannot open path file " + file.string());
  return read_path_csv(in);
}

}  // namespace mpkam
