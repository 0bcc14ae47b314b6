#include "mpkam/fields.hpp"

#include <cmath>

#include "mpkam/errors.hpp"

namespace mpkam::fields {

namespace {

void zero_derivative(const Vector&, DerivativeTensor&) {}

}  // namespace

DiffusionField identity(int n) {
  return constant(Matrix::Identity(2 * n, 2 * n));
}

DiffusionField constant(const Matrix& sigma, double half_width) {
  if (sigma.rows() != sigma.cols() || sigma.rows() % 2 != 0) {
    throw ContractViolation("constant field needs a square matrix of even size");
  }
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw ContractViolation("constant field must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma * sigma, Eigen::EigenvaluesOnly);
  const double lambda = eig.eigenvalues().minCoeff();
  const double Lambda = eig.eigenvalues().maxCoeff();
  const int dim = static_cast<int>(sigma.rows());
  const bool is_identity = sigma.isIdentity(0.0);
  DiffusionField field(
      is_identity ? "identity" : "constant", dim / 2, [sigma](const Vector&) { return sigma; },
      zero_derivative, lambda, Lambda, DomainBox::cube(dim, half_width));
  field.set_constant();
  // constant sigma: column i is J grad H_i with H_i(x) = -(J sigma_i) . x
  std::vector<ColumnHamiltonian> cols;
  for (int i = 0; i < dim; ++i) {
    const Vector g = -apply_j(sigma.col(i));
    cols.push_back({[g](const Vector& x) { return g.dot(x); }, [g](const Vector&) { return g; }});
  }
  field.set_column_hamiltonians(std::move(cols));
  field.set_c3_witness({[sigma](const Vector& y) { return Vector(sigma * y); },
                        [sigma](const Vector&) { return sigma; },
                        DomainBox::cube(dim, 1.0)});
  return field;
}

DiffusionField quadratic(double a) {
  if (!(a >= 0.0)) throw ContractViolation("quadratic field needs a >= 0");
  auto sigma = [a](const Vector& x) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = 1.0 + a * x[1] * x[1];
    s(1, 1) = 1.0 + a * x[0] * x[0];
    return s;
  };
  auto derivative = [a](const Vector& x, DerivativeTensor& d) {
    d.slice[0](1, 1) = 2.0 * a * x[0];
    d.slice[1](0, 0) = 2.0 * a * x[1];
  };
  const double top = (1.0 + a) * (1.0 + a);
  DiffusionField field("quadratic", 1, sigma, derivative, 1.0, top, DomainBox::cube(2, 1.0));
  field.set_divergence_jacobian([](const Vector&) { return Matrix(Matrix::Zero(2, 2)); });
  field.set_column_hamiltonians(
      {{[a](const Vector& x) { return x[1] + a * x[1] * x[1] * x[1] / 3.0; },
        [a](const Vector& x) {
          Vector g(2);
          g << 0.0, 1.0 + a * x[1] * x[1];
          return g;
        }},
       {[a](const Vector& x) { return -(x[0] + a * x[0] * x[0] * x[0] / 3.0); },
        [a](const Vector& x) {
          Vector g(2);
          g << -(1.0 + a * x[0] * x[0]), 0.0;
          return g;
        }}});
  return field;
}

DiffusionField sqrt_diag() {
  auto sigma = [](const Vector& x) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = std::sqrt(1.0 + x[0] * x[0]);
    s(1, 1) = std::sqrt(1.0 + x[1] * x[1]);
    return s;
  };
  auto derivative = [](const Vector& x, DerivativeTensor& d) {
    d.slice[0](0, 0) = x[0] / std::sqrt(1.0 + x[0] * x[0]);
    d.slice[1](1, 1) = x[1] / std::sqrt(1.0 + x[1] * x[1]);
  };
  DiffusionField field("sqrt", 1, sigma, derivative, 1.0, 5.0, DomainBox::cube(2, 2.0));
  field.set_divergence_jacobian([](const Vector& x) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::pow(1.0 + x[0] * x[0], -1.5);
    m(1, 1) = std::pow(1.0 + x[1] * x[1], -1.5);
    return m;
  });
  field.set_c3_witness({[](const Vector& y) {
                          Vector u(2);
                          u << std::sinh(y[0]), std::sinh(y[1]);
                          return u;
                        },
                        [](const Vector& y) {
                          Matrix m = Matrix::Zero(2, 2);
                          m(0, 0) = std::cosh(y[0]);
                          m(1, 1) = std::cosh(y[1]);
                          return m;
                        },
                        DomainBox::cube(2, 1.4)});
  return field;
}

DiffusionField degenerate(double lambda, double half_width) {
  auto sigma = [](const Vector& x) {
    Matrix s = Matrix::Zero(2, 2);
    s(0, 0) = x[0];
    s(1, 1) = 1.0;
    return s;
  };
  auto derivative = [](const Vector&, DerivativeTensor& d) { d.slice[0](0, 0) = 1.0; };
  const double top = std::max(1.0, half_width * half_width);
  DiffusionField field("degenerate", 1, sigma, derivative, lambda, top,
                       DomainBox::cube(2, half_width));
  field.set_divergence_jacobian([](const Vector&) { return Matrix(Matrix::Zero(2, 2)); });
  return field;
}

std::vector<std::string> names() { return {"identity", "quadratic", "sqrt", "degenerate"}; }

DiffusionField make(const std::string& name, const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "identity") {
    const double n = get("n", 1.0);
    if (n != std::floor(n) || n < 1 || 2 * n > kMaxDim) {
      throw ContractViolation("identity: n must be a positive integer <= " +
                              std::to_string(kMaxDim / 2));
    }
    return identity(static_cast<int>(n));
  }
  if (name == "quadratic") return quadratic(get("a", 0.1));
  if (name == "sqrt") return sqrt_diag();
  if (name == "degenerate") return degenerate(get("lambda", 0.1), get("half_width", 1.0));
  throw ContractViolation("unknown field '" + name + "'");
}

}  // namespace mpkam::fields
