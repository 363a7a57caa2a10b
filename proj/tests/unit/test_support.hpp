#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "vrg/profiler.hpp"
#include "vrg/trajectory.hpp"

namespace vrg::testing {

/// Random strictly decreasing trajectory of K levels spanning roughly
/// [1e-4, 0.999] in half-log-SNR.
inline Trajectory random_trajectory(std::mt19937_64& gen, std::size_t K) {
  std::uniform_real_distribution<double> lam(-4.5, 3.5);
  std::vector<double> lambdas;
  while (lambdas.size() < K) {
    const double l = lam(gen);
    if (std::none_of(lambdas.begin(), lambdas.end(), [&](double o) { return std::abs(o - l) < 1e-3; })) {
      lambdas.push_back(l);
    }
  }
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  Trajectory t;
  t.label = "random";
  for (double l : lambdas) t.alpha_bar.push_back(1.0 / (1.0 + std::exp(-2.0 * l)));
  return t;
}

/// Random increasing profile on [lo, hi] with n knots.
inline ErrorProfile random_increasing_profile(std::mt19937_64& gen, std::size_t n, double lo = 1e-6,
                                              double hi = 1.0 - 1e-7) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    x[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * f);
  }
  x.front() = lo;
  x.back() = hi;
  double acc = 0.05 * u(gen);
  for (std::size_t i = 0; i < n; ++i) {
    acc += 0.2 * u(gen) / static_cast<double>(n) + 0.5 * (x[i] - (i ? x[i - 1] : 0.0)) * u(gen);
    y[i] = acc;
  }
  return ErrorProfile::from_points(x, y);
}

/// Random positive (not necessarily monotone) profile.
inline ErrorProfile random_positive_profile(std::mt19937_64& gen, std::size_t n, double lo = 1e-6,
                                            double hi = 1.0 - 1e-7) {
  std::uniform_real_distribution<double> u(0.01, 1.5);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    x[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * f);
    y[i] = u(gen);
  }
  x.front() = lo;
  x.back() = hi;
  return ErrorProfile::from_points(x, y);
}

inline double relative_difference(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace vrg::testing
