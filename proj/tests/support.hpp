#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mpkam/linalg.hpp"
#include "mpkam/path.hpp"

namespace testing {

/// Small deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  mpkam::Vector vector(int dim, double lo, double hi) {
    mpkam::Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Smooth random path: x0 + linear drift + a few sine modes, clamped to
  /// [lo, hi] by construction of the amplitudes.
  mpkam::DiscretePath smooth_path(double T, int N, int dim, double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    Eigen::MatrixXd v(N + 1, dim);
    for (int j = 0; j < dim; ++j) {
      const double c = mid + uniform(-0.3, 0.3) * half;
      const double a1 = uniform(-0.25, 0.25) * half;
      const double a2 = uniform(-0.15, 0.15) * half;
      const double f1 = uniform(0.5, 2.0);
      const double f2 = uniform(2.0, 4.0);
      const double ph = uniform(0.0, 6.0);
      for (int k = 0; k <= N; ++k) {
        const double t = T * k / N;
        v(k, j) = c + a1 * std::sin(f1 * t + ph) + a2 * std::cos(f2 * t);
      }
    }
    return {T, v};
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Central difference of a scalar function, independent of the library's.
template <typename F>
mpkam::Vector fd_gradient(F&& f, const mpkam::Vector& x, double h) {
  mpkam::Vector g(x.size());
  mpkam::Vector y = x;
  for (int i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double fp = f(y);
    y[i] = x[i] - h;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
