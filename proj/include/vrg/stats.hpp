#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace vrg {

/// Streaming central moments up to order four (Welford/Terriberry updates,
/// with a pairwise merge so chunked accumulation can be combined in a fixed
/// order).
class RunningMoments {
 public:
  void add(double x) noexcept {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ - 4 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
    m2_ += term1;
  }

  void merge(const RunningMoments& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.mean_ - mean_;
    const double d2 = delta * delta;
    const double d3 = d2 * delta;
    const double d4 = d2 * d2;
    const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
    const double m3 = m3_ + o.m3_ + d3 * na * nb * (na - nb) / (n * n) +
                      3.0 * delta * (na * o.m2_ - nb * m2_) / n;
    const double m4 = m4_ + o.m4_ + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                      6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                      4.0 * delta * (na * o.m3_ - nb * m3_) / n;
    mean_ += delta * nb / n;
    m2_ = m2;
    m3_ = m3;
    m4_ = m4;
    n_ += o.n_;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance.
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Standard error of the mean.
  double standard_error() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  /// Non-excess kurtosis m4 / m2^2 (3 for a Gaussian).
  double kurtosis() const noexcept {
    return m2_ > 0 ? static_cast<double>(n_) * m4_ / (m2_ * m2_) : 0.0;
  }
  /// Large-sample standard error of variance(), from the fourth central
  /// moment: sqrt((mu4 - sigma^4) / n).
  double variance_standard_error() const noexcept {
    if (n_ < 2) return 0.0;
    const double n = static_cast<double>(n_);
    const double mu2 = m2_ / n;
    const double mu4 = m4_ / n;
    return std::sqrt(std::max(mu4 - mu2 * mu2, 0.0) / n);
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

}  // namespace vrg
