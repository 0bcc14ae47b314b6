#include "mpkam/noise_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpkam/errors.hpp"

namespace mpkam {

DiffusionField::DiffusionField(std::string name, int n, SigmaFn sigma, DerivativeFn derivative,
                               double lambda, double Lambda, DomainBox validity)
    : name_(std::move(name)),
      n_(n),
      sigma_(std::move(sigma)),
      derivative_(std::move(derivative)),
      lambda_(lambda),
      Lambda_(Lambda),
      validity_(std::move(validity)) {
  if (n_ < 1 || 2 * n_ > kMaxDim) throw ContractViolation("field dimension out of range");
  if (!(lambda_ > 0.0) || !(Lambda_ >= lambda_)) {
    throw ContractViolation("ellipticity bounds need 0 < lambda <= Lambda");
  }
  if (validity_.dim() != 2 * n_) throw ContractViolation("validity box has the wrong dimension");
}

void DiffusionField::check_dim(const Vector& x) const {
  if (x.size() != dim()) throw ContractViolation("field evaluated at a point of wrong dimension");
}

Matrix DiffusionField::sigma(const Vector& x) const {
  check_dim(x);
  return sigma_(x);
}

DerivativeTensor DiffusionField::derivative(const Vector& x) const {
  DerivativeTensor d;
  derivative(x, d);
  return d;
}

void DiffusionField::derivative(const Vector& x, DerivativeTensor& out) const {
  check_dim(x);
  out.resize(dim());
  if (constant_) return;
  derivative_(x, out);
}

Matrix DiffusionField::divergence_jacobian(const Vector& x) const {
  check_dim(x);
  if (constant_) return Matrix::Zero(dim(), dim());
  if (div_jacobian_) return div_jacobian_(x);
  return finite_difference_jacobian([this](const Vector& y) { return divergence_sigma(*this, y); },
                                    x);
}

DiffusionField DiffusionField::scaled(double c) const {
  if (!(c > 0.0)) throw ContractViolation("field scale must be positive");
  DiffusionField out = *this;
  out.name_ = name_ + "*" + std::to_string(c);
  out.sigma_ = [s = sigma_, c](const Vector& x) { return Matrix(c * s(x)); };
  out.derivative_ = [d = derivative_, c](const Vector& x, DerivativeTensor& t) {
    d(x, t);
    for (int k = 0; k < t.dim; ++k) t.slice[k] *= c;
  };
  if (div_jacobian_) {
    out.div_jacobian_ = [f = div_jacobian_, c](const Vector& x) { return Matrix(c * f(x)); };
  }
  out.lambda_ = c * c * lambda_;
  out.Lambda_ = c * c * Lambda_;
  if (columns_) {
    std::vector<ColumnHamiltonian> cols;
    for (const auto& col : *columns_) {
      cols.push_back({[e = col.energy, c](const Vector& x) { return c * e(x); },
                      [g = col.gradient, c](const Vector& x) { return Vector(c * g(x)); }});
    }
    out.columns_ = std::move(cols);
  }
  out.witness_.reset();
  return out;
}

Matrix sigma_inverse(const DiffusionField& field, const Vector& x) {
  const Matrix s = field.sigma(x);
  if (!s.allFinite()) throw NearSingularityError("sigma is not finite");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  const Vector ev = eig.eigenvalues();
  const double smin = ev.cwiseAbs().minCoeff();
  const double smax = ev.cwiseAbs().maxCoeff();
  const double floor = 0.1 * std::sqrt(field.lambda());
  const double max_cond = 10.0 * std::sqrt(field.Lambda() / field.lambda());
  if (smin < floor || smax > max_cond * smin) {
    throw NearSingularityError("sigma nearly singular (smallest singular value " +
                               std::to_string(smin) + ", condition " +
                               std::to_string(smin > 0 ? smax / smin : INFINITY) + ")");
  }
  const Matrix& v = eig.eigenvectors();
  Matrix inv = v * ev.cwiseInverse().asDiagonal() * v.transpose();
  return 0.5 * (inv + inv.transpose());
}

Vector divergence_sigma(const DerivativeTensor& d) {
  Vector div = Vector::Zero(d.dim);
  for (int j = 0; j < d.dim; ++j) {
    for (int i = 0; i < d.dim; ++i) div[j] += d.slice[i](i, j);
  }
  return div;
}

Vector divergence_sigma(const DiffusionField& field, const Vector& x) {
  return divergence_sigma(field.derivative(x));
}

Vector ito_drift_correction(const Matrix& sigma, const DerivativeTensor& d) {
  // (sigma_i . grad) sigma_i = sum_k sigma_ki d sigma_{.i} / d x_k
  Vector c = Vector::Zero(d.dim);
  for (int i = 0; i < d.dim; ++i) {
    for (int k = 0; k < d.dim; ++k) c += sigma(k, i) * d.slice[k].col(i);
  }
  return 0.5 * c;
}

Vector ito_drift_correction(const DiffusionField& field, const Vector& x) {
  if (field.is_constant()) return Vector::Zero(field.dim());
  return ito_drift_correction(field.sigma(x), field.derivative(x));
}

Vector lie_bracket(const Matrix& sigma, const DerivativeTensor& d, int j, int k) {
  // (DV_k V_j)_a = sum_b d sigma_ak / d x_b * sigma_bj
  Vector out = Vector::Zero(d.dim);
  for (int b = 0; b < d.dim; ++b) {
    out += d.slice[b].col(k) * sigma(b, j);
    out -= d.slice[b].col(j) * sigma(b, k);
  }
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_checked: return "not-checked";
  }
  return "not-checked";
}

Verdict ConditionReport::verdict(const std::string& condition) const {
  const auto* r = find(condition);
  return r ? r->verdict : Verdict::not_checked;
}

const ConditionResult* ConditionReport::find(const std::string& condition) const {
  for (const auto& r : results) {
    if (r.condition == condition) return &r;
  }
  return nullptr;
}

ConditionReport& ConditionReport::merge(const ConditionReport& other) {
  results.insert(results.end(), other.results.begin(), other.results.end());
  return *this;
}

namespace {

nlohmann::json vec_json(const Vector& v) {
  auto arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

nlohmann::json ConditionReport::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j;
    j["condition"] = r.condition;
    j["verdict"] = to_string(r.verdict);
    j["worst_point"] = vec_json(r.worst_point);
    j["worst_magnitude"] = r.worst_magnitude;
    j["tolerance"] = r.tolerance;
    j["samples"] = r.samples;
    if (r.box) j["box"] = {{"lo", vec_json(r.box->lo)}, {"hi", vec_json(r.box->hi)}};
    if (!r.detail.empty()) j["detail"] = r.detail;
    arr.push_back(std::move(j));
  }
  return {{"conditions", arr}};
}

namespace {

constexpr int kPrimes[kMaxDim] = {2, 3, 5, 7, 11, 13, 17, 19};

double radical_inverse(std::size_t i, int base) {
  double f = 1.0;
  double r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

void check_box(const DomainBox& box, int dim) {
  if (box.dim() != dim) throw ContractViolation("domain box has the wrong dimension");
  for (int i = 0; i < dim; ++i) {
    if (!(box.lo[i] <= box.hi[i])) throw ContractViolation("domain box is empty");
  }
}

/// Tracks the largest magnitude seen and where it occurred.
struct Worst {
  double magnitude = -std::numeric_limits<double>::infinity();
  Vector point;
  void offer(double m, const Vector& x) {
    if (m > magnitude) {
      magnitude = m;
      point = x;
    }
  }
};

ConditionResult finish(std::string condition, const Worst& worst, double tolerance,
                       std::size_t samples, const DomainBox& box, std::string detail = {}) {
  ConditionResult r;
  r.condition = std::move(condition);
  r.worst_magnitude = worst.magnitude;
  r.worst_point = worst.point;
  r.tolerance = tolerance;
  r.samples = samples;
  r.box = box;
  r.verdict = worst.magnitude <= tolerance ? Verdict::pass : Verdict::fail;
  r.detail = std::move(detail);
  return r;
}

}  // namespace

std::vector<Vector> sample_box(const DomainBox& box, std::size_t samples) {
  const int dim = box.dim();
  std::vector<Vector> pts;
  pts.reserve(samples + (std::size_t{1} << dim) + 1);
  const Vector width = box.hi - box.lo;
  for (std::size_t i = 1; i <= samples; ++i) {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) x[d] = box.lo[d] + width[d] * radical_inverse(i, kPrimes[d]);
    pts.push_back(x);
  }
  for (std::size_t mask = 0; mask < (std::size_t{1} << dim); ++mask) {
    Vector x(dim);
    for (int d = 0; d < dim; ++d) x[d] = (mask >> d) & 1U ? box.hi[d] : box.lo[d];
    pts.push_back(x);
  }
  pts.push_back(0.5 * (box.lo + box.hi));
  return pts;
}

ConditionReport check_lipschitz(const HamiltonianSystem& sys, const DomainBox& box,
                                std::size_t samples) {
  check_box(box, sys.dim());
  ConditionResult r;
  r.condition = "C1";
  r.box = box;
  if (!sys.lipschitz_bound()) {
    r.detail = "no Lipschitz bound declared";
    return {{r}};
  }
  const double bound = *sys.lipschitz_bound();
  Worst worst;
  const auto pts = sample_box(box, samples);
  for (const auto& x : pts) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sys.hessian(x), Eigen::EigenvaluesOnly);
    worst.offer(eig.eigenvalues().cwiseAbs().maxCoeff(), x);
  }
  // bound compared with the largest Hessian eigenvalue magnitude
  auto res = finish("C1", worst, bound * (1.0 + 1e-9) + 1e-12, pts.size(), box,
                    "max spectral norm of the Hessian vs declared Lipschitz bound");
  return {{res}};
}

ConditionReport check_ellipticity(const DiffusionField& field, const DomainBox& box,
                                  std::size_t samples) {
  if (samples < 1) throw ContractViolation("need at least one sample");
  check_box(box, field.dim());
  const double lo = field.lambda() * (1.0 - 1e-9);
  const double hi = field.Lambda() * (1.0 + 1e-9);
  Worst worst;
  const auto pts = sample_box(box, samples);
  for (const auto& x : pts) {
    const Matrix s = field.sigma(x);
    // the Rayleigh quotients of sigma^2 over all v span its eigenvalue range
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s * s, Eigen::EigenvaluesOnly);
    const double emin = eig.eigenvalues().minCoeff();
    const double emax = eig.eigenvalues().maxCoeff();
    const double violation = std::max(lo - emin, emax - hi);
    worst.offer(std::isfinite(violation) ? violation : INFINITY, x);
  }
  return {{finish("C2", worst, 0.0, pts.size(), box,
                  "largest excursion of the eigenvalues of sigma^2 outside [lambda, Lambda]")}};
}

ConditionReport check_frobenius(const DiffusionField& field, const DomainBox& box,
                                std::size_t samples) {
  check_box(box, field.dim());
  constexpr double kTol = 1e-8;
  Worst worst;
  const auto pts = sample_box(box, samples);
  DerivativeTensor d;
  for (const auto& x : pts) {
    const Matrix s = field.sigma(x);
    field.derivative(x, d);
    const double scale = 1.0 + s.operatorNorm();
    double m = 0.0;
    for (int j = 0; j < field.dim(); ++j) {
      for (int k = j + 1; k < field.dim(); ++k) m = std::max(m, lie_bracket(s, d, j, k).norm());
    }
    worst.offer(m / scale, x);
  }
  return {{finish("C3-frobenius", worst, kTol, pts.size(), box,
                  "max |[V_j, V_k]| / (1 + |sigma|)")}};
}

ConditionReport check_hamiltonian_columns(const DiffusionField& field, const DomainBox& box,
                                          std::size_t samples) {
  check_box(box, field.dim());
  constexpr double kTol = 1e-8;
  constexpr double kWitnessTol = 1e-10;
  const int dim = field.dim();
  const Matrix j = symplectic_matrix(field.n());
  Worst worst;
  Worst witness;
  const auto pts = sample_box(box, samples);
  DerivativeTensor d;
  for (const auto& x : pts) {
    const Matrix s = field.sigma(x);
    field.derivative(x, d);
    const double scale = 1.0 + s.operatorNorm();
    double m = 0.0;
    for (int i = 0; i < dim; ++i) {
      Matrix dv(dim, dim);  // (a, b) = d sigma_ai / d x_b
      for (int b = 0; b < dim; ++b) dv.col(b) = d.slice[b].col(i);
      const Matrix a = -j * dv;
      m = std::max(m, (a - a.transpose()).cwiseAbs().maxCoeff());
    }
    worst.offer(m / scale, x);
    if (field.column_hamiltonians()) {
      const auto& cols = *field.column_hamiltonians();
      double w = 0.0;
      for (int i = 0; i < dim && i < static_cast<int>(cols.size()); ++i) {
        w = std::max(w, (s.col(i) - apply_j(cols[i].gradient(x))).lpNorm<Eigen::Infinity>());
      }
      witness.offer(w, x);
    }
  }
  auto res = finish("C4", worst, kTol, pts.size(), box,
                    "max asymmetry of D(-J sigma_i) / (1 + |sigma|)");
  if (field.column_hamiltonians()) {
    if (static_cast<int>(field.column_hamiltonians()->size()) != dim) {
      res.verdict = Verdict::fail;
      res.detail += "; witness list has the wrong length";
    } else if (witness.magnitude > kWitnessTol) {
      res.verdict = Verdict::fail;
      res.worst_point = witness.point;
      res.detail += "; column Hamiltonian witness mismatch " + std::to_string(witness.magnitude);
    } else {
      res.detail += "; column Hamiltonian witnesses verified";
    }
  }
  return {{res}};
}

ConditionReport check_c3_witness(const DiffusionField& field, std::size_t samples) {
  ConditionResult r;
  r.condition = "C3-witness";
  if (!field.c3_witness()) {
    r.detail = "no chart witness supplied";
    return {{r}};
  }
  const auto& w = *field.c3_witness();
  check_box(w.domain, field.dim());
  Worst worst;
  const auto pts = sample_box(w.domain, samples);
  for (const auto& y : pts) {
    const Matrix diff = field.sigma(w.map(y)) - w.jacobian(y);
    worst.offer(diff.cwiseAbs().maxCoeff(), y);
  }
  return {{finish("C3-witness", worst, 1e-10, pts.size(), w.domain,
                  "sup |sigma(U(y)) - DU(y)| over the chart domain")}};
}

}  // namespace mpkam
