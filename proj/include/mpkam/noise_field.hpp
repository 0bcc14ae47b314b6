#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpkam/hamiltonian.hpp"
#include "mpkam/linalg.hpp"

namespace mpkam {

/// slice[k](i, j) = d sigma_ij / d x_k for k < dim.
struct DerivativeTensor {
  int dim = 0;
  std::array<Matrix, kMaxDim> slice;

  void resize(int d) {
    dim = d;
    for (int k = 0; k < d; ++k) slice[k].setZero(d, d);
  }
};

/// A column of sigma written as J grad H_i.
struct ColumnHamiltonian {
  std::function<double(const Vector&)> energy;
  std::function<Vector(const Vector&)> gradient;
};

/// A chart U with sigma(U(y)) = DU(y).
struct ChartWitness {
  std::function<Vector(const Vector&)> map;
  std::function<Matrix(const Vector&)> jacobian;
  DomainBox domain;
};

/// Symmetric, state-dependent diffusion coefficient sigma on R^{2n}.
class DiffusionField {
 public:
  using SigmaFn = std::function<Matrix(const Vector&)>;
  using DerivativeFn = std::function<void(const Vector&, DerivativeTensor&)>;
  /// (j, l) -> d (div sigma)_j / d x_l
  using DivergenceJacobianFn = std::function<Matrix(const Vector&)>;

  DiffusionField(std::string name, int n, SigmaFn sigma, DerivativeFn derivative, double lambda,
                 double Lambda, DomainBox validity);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int dim() const { return 2 * n_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double Lambda() const { return Lambda_; }
  [[nodiscard]] const DomainBox& validity_box() const { return validity_; }
  [[nodiscard]] bool is_constant() const { return constant_; }

  [[nodiscard]] Matrix sigma(const Vector& x) const;
  [[nodiscard]] DerivativeTensor derivative(const Vector& x) const;
  void derivative(const Vector& x, DerivativeTensor& out) const;
  /// Analytic when supplied, otherwise central differences of div sigma.
  [[nodiscard]] Matrix divergence_jacobian(const Vector& x) const;

  [[nodiscard]] const std::optional<std::vector<ColumnHamiltonian>>& column_hamiltonians() const {
    return columns_;
  }
  [[nodiscard]] const std::optional<ChartWitness>& c3_witness() const { return witness_; }

  DiffusionField& set_constant(bool v = true) { constant_ = v; return *this; }
  DiffusionField& set_divergence_jacobian(DivergenceJacobianFn f) {
    div_jacobian_ = std::move(f);
    return *this;
  }
  DiffusionField& set_column_hamiltonians(std::vector<ColumnHamiltonian> c) {
    columns_ = std::move(c);
    return *this;
  }
  DiffusionField& set_c3_witness(ChartWitness w) { witness_ = std::move(w); return *this; }

  /// c * sigma with ellipticity bounds scaled by c^2. Chart witnesses are dropped.
  [[nodiscard]] DiffusionField scaled(double c) const;

 private:
  void check_dim(const Vector& x) const;

  std::string name_;
  int n_;
  SigmaFn sigma_;
  DerivativeFn derivative_;
  DivergenceJacobianFn div_jacobian_;
  double lambda_;
  double Lambda_;
  DomainBox validity_;
  bool constant_ = false;
  std::optional<std::vector<ColumnHamiltonian>> columns_;
  std::optional<ChartWitness> witness_;
};

/// sigma(x)^{-1}. Throws NearSingularityError when the smallest singular value
/// drops below sqrt(lambda)/10 or the condition number exceeds
/// 10 sqrt(Lambda/lambda).
Matrix sigma_inverse(const DiffusionField& field, const Vector& x);

/// (div sigma)_j = sum_i d sigma_ij / d x_i.
Vector divergence_sigma(const DiffusionField& field, const Vector& x);
Vector divergence_sigma(const DerivativeTensor& d);

/// 1/2 sum_i (sigma_i . grad) sigma_i, sigma_i the i-th column.
Vector ito_drift_correction(const DiffusionField& field, const Vector& x);
Vector ito_drift_correction(const Matrix& sigma, const DerivativeTensor& d);

enum class Verdict { pass, fail, not_checked };
const char* to_string(Verdict v);

struct ConditionResult {
  std::string condition;  // "C1", "C2", "C3-frobenius", "C3-witness", "C4"
  Verdict verdict = Verdict::not_checked;
  Vector worst_point;
  double worst_magnitude = 0.0;
  double tolerance = 0.0;
  std::size_t samples = 0;
  std::optional<DomainBox> box;
  std::string detail;
};

struct ConditionReport {
  std::vector<ConditionResult> results;

  /// Verdict of a named condition; not_checked when absent.
  [[nodiscard]] Verdict verdict(const std::string& condition) const;
  [[nodiscard]] const ConditionResult* find(const std::string& condition) const;
  ConditionReport& merge(const ConditionReport& other);
  [[nodiscard]] nlohmann::json to_json() const;
};

inline constexpr std::size_t kDefaultConditionSamples = 4096;

/// Halton points over the box followed by the box corners and centre.
std::vector<Vector> sample_box(const DomainBox& box, std::size_t samples);

ConditionReport check_lipschitz(const HamiltonianSystem& sys, const DomainBox& box,
                                std::size_t samples = kDefaultConditionSamples);
ConditionReport check_ellipticity(const DiffusionField& field, const DomainBox& box,
                                  std::size_t samples = kDefaultConditionSamples);
ConditionReport check_frobenius(const DiffusionField& field, const DomainBox& box,
                                std::size_t samples = kDefaultConditionSamples);
ConditionReport check_hamiltonian_columns(const DiffusionField& field, const DomainBox& box,
                                          std::size_t samples = kDefaultConditionSamples);
/// Direct test of sigma(U(y)) = DU(y) over the witness domain.
ConditionReport check_c3_witness(const DiffusionField& field,
                                 std::size_t samples = kDefaultConditionSamples);

/// Lie bracket [V_j, V_k] = DV_k V_j - DV_j V_k of columns j and k.
Vector lie_bracket(const Matrix& sigma, const DerivativeTensor& d, int j, int k);

}  // namespace mpkam
