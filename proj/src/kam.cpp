#include "mpkam/kam.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>

#include "mpkam/errors.hpp"
#include "mpkam/parallel.hpp"
#include "mpkam/path.hpp"

namespace mpkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// |sum_k w_k exp(i (theta_k - omega t_k))|
double window_magnitude(const Eigen::VectorXd& theta, const Eigen::VectorXd& window, double dt,
                        double omega) {
  std::complex<double> acc = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double ph = theta[k] - omega * dt * static_cast<double>(k);
    acc += window[k] * std::complex<double>(std::cos(ph), std::sin(ph));
  }
  return std::abs(acc);
}

/// Calls visit(k) for every integer vector with |k|_1 == s whose first
/// nonzero entry is positive.
template <typename Visit>
void for_each_shell(int n, int s, Visit&& visit) {
  std::vector<int> k(n, 0);
  auto rec = [&](auto&& self, int idx, int remaining, bool seen_nonzero) -> void {
    if (idx == n - 1) {
      if (remaining == 0) {
        if (seen_nonzero) {
          k[idx] = 0;
          visit(k);
        }
        return;
      }
      k[idx] = remaining;
      visit(k);
      if (seen_nonzero) {
        k[idx] = -remaining;
        visit(k);
      }
      return;
    }
    for (int a = seen_nonzero ? -remaining : 0; a <= remaining; ++a) {
      k[idx] = a;
      self(self, idx + 1, remaining - std::abs(a), seen_nonzero || a != 0);
    }
  };
  rec(rec, 0, s, false);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Eigen::MatrixXd unwrap_angles(const Eigen::MatrixXd& angles) {
  if (!angles.allFinite()) throw ContractViolation("angle series must be finite");
  Eigen::MatrixXd out = angles;
  for (Eigen::Index c = 0; c < angles.cols(); ++c) {
    bool forward = false;
    bool backward = false;
    bool large = false;
    for (Eigen::Index k = 1; k < angles.rows(); ++k) {
      double d = angles(k, c) - angles(k - 1, c);
      d -= kTwoPi * std::round(d / kTwoPi);
      forward |= d > 0.0;
      backward |= d < 0.0;
      large |= std::abs(d) > 0.5 * std::numbers::pi;
      out(k, c) = out(k - 1, c) + d;
    }
    if (forward && backward && large) {
      throw SamplingTooCoarseError("angle component " + std::to_string(c) +
                                   " cannot be unwrapped unambiguously; sample more densely");
    }
  }
  return out;
}

FrequencyVector frequency_estimate(const Eigen::MatrixXd& angles, double T) {
  if (angles.rows() < 8 || angles.cols() < 1) throw ContractViolation("angle series too short");
  if (!(T > 0.0)) throw ContractViolation("T must be positive");
  const Eigen::MatrixXd theta = unwrap_angles(angles);
  const Eigen::Index m = theta.rows();
  const double dt = T / static_cast<double>(m - 1);
  Eigen::VectorXd t(m);
  Eigen::VectorXd window(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    t[k] = dt * static_cast<double>(k);
    window[k] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(m - 1)));
  }
  const double tbar = t.mean();
  const double stt = (t.array() - tbar).square().sum();

  FrequencyVector f;
  f.omega.resize(theta.cols());
  f.estimated_error.resize(theta.cols());
  for (Eigen::Index c = 0; c < theta.cols(); ++c) {
    const Eigen::VectorXd y = theta.col(c);
    const double ybar = y.mean();
    const double slope = ((t.array() - tbar) * (y.array() - ybar)).sum() / stt;
    const double icpt = ybar - slope * tbar;
    const double rss = (y.array() - icpt - slope * t.array()).square().sum();
    const double slope_se = std::sqrt(rss / static_cast<double>(m - 2) / stt);

    // scan a few quarter-bins around the slope, then refine with a parabola
    // through the log magnitudes at the best point and its neighbours
    const double delta = std::numbers::pi / (2.0 * T);
    constexpr int kHalf = 4;
    std::vector<double> mag(2 * kHalf + 1);
    int best = kHalf;
    for (int j = -kHalf; j <= kHalf; ++j) {
      mag[j + kHalf] = window_magnitude(y, window, dt, slope + j * delta);
      if (mag[j + kHalf] > mag[best]) best = j + kHalf;
    }
    double refined = slope + (best - kHalf) * delta;
    if (best > 0 && best < 2 * kHalf) {
      const double a = std::log(mag[best - 1]);
      const double b = std::log(mag[best]);
      const double cc = std::log(mag[best + 1]);
      const double den = a - 2.0 * b + cc;
      if (den < 0.0) refined += 0.5 * (a - cc) / den * delta;
    }
    f.omega[c] = refined;
    f.estimated_error[c] =
        std::max({std::abs(refined - slope), slope_se, 1e-9 * (1.0 + std::abs(refined))});
  }
  return f;
}

void KAMParams::validate() const {
  if (n < 1) throw InvalidParameters("KAM params: n must be >= 1");
  if (!(nu > n)) throw InvalidParameters("KAM params: need nu > n");
  if (!(l > 2.0 * nu)) throw InvalidParameters("KAM params: need l > 2 nu");
  if (!(alpha > 0.0)) throw InvalidParameters("KAM params: alpha must be positive");
  if (k_max < 1) throw InvalidParameters("KAM params: k_max must be >= 1");
  if (!(c > 0.0)) throw InvalidParameters("KAM params: c must be positive");
}

DiophantineResult diophantine_check(const Vector& omega, const KAMParams& params) {
  if (params.k_max < 1) throw ContractViolation("diophantine_check needs k_max >= 1");
  if (omega.size() < 1 || !omega.allFinite()) throw ContractViolation("omega must be finite");
  const int n = static_cast<int>(omega.size());
  const double tau = params.tau();
  DiophantineResult r;
  r.k_max = params.k_max;
  r.min_value = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= params.k_max; ++s) {
    const double weight = std::pow(static_cast<double>(s), tau);
    for_each_shell(n, s, [&](const std::vector<int>& k) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += omega[i] * k[i];
      const double v = std::abs(dot) * weight;
      if (v < r.min_value) {
        r.min_value = v;
        r.worst_k = k;
      }
    });
  }
  r.margin = r.min_value - params.alpha;
  r.passes = r.min_value >= params.alpha;
  return r;
}

double alpha_from_eta(double eta, const KAMParams& params) {
  if (!(eta > 0.0)) throw InvalidParameters("alpha_from_eta needs eta > 0");
  if (!(params.l > 0.0)) throw InvalidParameters("alpha_from_eta needs l > 0");
  const double exponent = 0.5 - params.nu / params.l;
  if (!(exponent > 0.0)) throw InvalidParameters("alpha_from_eta needs nu / l < 1/2");
  return params.c * std::pow(eta, exponent);
}

PersistenceReport torus_persistence_scan(const HamiltonianSystem& sys, const DiffusionField& field,
                                         const std::vector<double>& etas,
                                         const std::vector<Vector>& initial_actions, double T,
                                         int N, const ScanOptions& options) {
  const auto& ni_opt = sys.nearly_integrable();
  if (!ni_opt) throw ContractViolation("persistence scan needs a nearly integrable system");
  const NearlyIntegrable& ni = *ni_opt;
  const KAMParams& params = options.params;
  params.validate();
  if (params.n != ni.n) throw InvalidParameters("KAM params n differs from the system");
  if (etas.empty() || initial_actions.empty()) throw ContractViolation("empty scan grid");
  for (double e : etas) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw ContractViolation("etas must be non-negative");
  }
  if (!(options.drift_tol > 0.0) || !(options.osc_tol_fraction > 0.0)) {
    throw ContractViolation("scan tolerances must be positive");
  }
  const DomainBox box = options.field_box.value_or(field.validity_box());
  const auto c4 = check_hamiltonian_columns(field, box);
  if (c4.verdict("C4") != Verdict::pass) {
    throw ContractViolation("field columns are not Hamiltonian; the deterministic flow is not the "
                            "most probable dynamics");
  }
  for (const auto& a : initial_actions) {
    if (a.size() != ni.n || !(a.minCoeff() > 0.0)) {
      throw ContractViolation("initial actions must be positive with n components");
    }
    const auto dio = diophantine_check(ni.h0_gradient(a), params);
    if (!dio.passes) {
      throw ContractViolation("unperturbed frequency at an initial action is not Diophantine "
                              "(margin " + format_double(dio.margin) + ")");
    }
  }

  // eta = 0 is always integrated so drifts have a baseline
  std::vector<double> grid = etas;
  const bool has_zero = std::find(grid.begin(), grid.end(), 0.0) != grid.end();
  if (!has_zero) grid.insert(grid.begin(), 0.0);

  const std::size_t na = initial_actions.size();
  std::vector<PersistenceRow> rows(grid.size() * na);
  parallel_for(rows.size(), [&](std::size_t idx) {
    PersistenceRow& row = rows[idx];
    row.eta = grid[idx / na];
    row.action0 = initial_actions[idx % na];
    try {
      const HamiltonianSystem chart = chart_system(ni, row.eta);
      Vector x0(2 * ni.n);
      x0.head(ni.n).setZero();
      x0.tail(ni.n) = row.action0;
      const DiscretePath flow = deterministic_flow(chart, x0, T, N);
      const FrequencyVector f = frequency_estimate(flow.values.leftCols(ni.n), T);
      row.omega = f.omega;
      row.omega_error = f.estimated_error;
      double osc = 0.0;
      for (int k = 0; k <= N; ++k) {
        osc = std::max(osc, (flow.values.row(k).tail(ni.n).transpose() - row.action0).norm());
      }
      row.osc = osc;
    } catch (const NumericDomainError& e) {
      row.failed = true;
      row.message = e.what();
    }
  });

  // baseline frequencies at eta = 0
  std::vector<const PersistenceRow*> base(na, nullptr);
  for (const auto& r : rows) {
    if (r.eta == 0.0) {
      for (std::size_t a = 0; a < na; ++a) {
        if (!base[a] && r.action0 == initial_actions[a]) base[a] = &r;
      }
    }
  }
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    auto& r = rows[idx];
    const PersistenceRow* b = base[idx % na];
    if (r.failed) continue;
    if (b == nullptr || b->failed) {
      r.failed = true;
      r.message = "no eta = 0 baseline";
      continue;
    }
    r.drift = (r.omega - b->omega).norm();
    r.survived = r.drift <= options.drift_tol &&
                 r.osc <= options.osc_tol_fraction * r.action0.norm();
  }

  PersistenceReport rep;
  rep.drift_tol = options.drift_tol;
  rep.osc_tol_fraction = options.osc_tol_fraction;
  rep.k_max = params.k_max;
  rep.predicted_exponent = 0.5 - params.nu / params.l;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool requested = has_zero || i > 0;
    EtaSummary s;
    s.eta = grid[i];
    double drift_sum = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      const auto& r = rows[i * na + a];
      if (r.failed) {
        ++s.failed;
        continue;
      }
      ++s.evaluated;
      s.survived += r.survived ? 1 : 0;
      drift_sum += r.drift;
    }
    s.fraction = s.evaluated > 0 ? static_cast<double>(s.survived) / s.evaluated : 0.0;
    s.mean_drift = s.evaluated > 0 ? drift_sum / s.evaluated : 0.0;
    if (requested) {
      rep.summary.push_back(s);
      for (std::size_t a = 0; a < na; ++a) rep.rows.push_back(rows[i * na + a]);
    }
  }
  std::vector<double> lx;
  std::vector<double> ly;
  std::vector<double> dx;
  std::vector<double> dy;
  for (const auto& s : rep.summary) {
    if (s.eta <= 0.0 || s.evaluated == 0) continue;
    if (s.fraction < 1.0) {
      lx.push_back(std::log(s.eta));
      ly.push_back(std::log(1.0 - s.fraction));
    }
    if (s.mean_drift > 0.0) {
      dx.push_back(std::log(s.eta));
      dy.push_back(std::log(s.mean_drift));
    }
  }
  rep.loss_slope = fit_slope(lx, ly);
  rep.drift_slope = fit_slope(dx, dy);
  return rep;
}

void write_persistence_csv(std::ostream& out, const PersistenceReport& report) {
  const int n = report.rows.empty() ? 0 : static_cast<int>(report.rows.front().action0.size());
  out << "eta";
  for (int i = 1; i <= n; ++i) out << ",I0_" << i;
  for (int i = 1; i <= n; ++i) out << ",omega_" << i;
  out << ",drift,osc,survived\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : report.rows) {
    out << format_double(r.eta);
    for (int i = 0; i < n; ++i) out << ',' << format_double(r.action0[i]);
    for (int i = 0; i < n; ++i) out << ',' << format_double(r.failed ? nan : r.omega[i]);
    out << ',' << format_double(r.failed ? nan : r.drift) << ','
        << format_double(r.failed ? nan : r.osc) << ',' << (r.failed ? "failed" : r.survived ? "1" : "0")
        << '\n';
  }
}

nlohmann::json persistence_summary(const PersistenceReport& report) {
  nlohmann::json per_eta = nlohmann::json::array();
  for (const auto& s : report.summary) {
    per_eta.push_back({{"eta", s.eta},
                       {"evaluated", s.evaluated},
                       {"survived", s.survived},
                       {"failed", s.failed},
                       {"survival_fraction", s.fraction},
                       {"mean_drift", s.mean_drift}});
  }
  auto num = [](double v) -> nlohmann::json {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  return {{"per_eta", per_eta},
          {"loss_loglog_slope", num(report.loss_slope)},
          {"drift_loglog_slope", num(report.drift_slope)},
          {"predicted_exponent", report.predicted_exponent},
          {"drift_tol", report.drift_tol},
          {"osc_tol_fraction", report.osc_tol_fraction},
          {"k_max", report.k_max}};
}

}  // namespace mpkam
