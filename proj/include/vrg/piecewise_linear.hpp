#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace vrg {

/// Piecewise-linear function through knots (x strictly increasing). Outside
/// the knot span the value is clamped to the nearest end knot.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  PiecewiseLinear(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {}

  std::span<const double> xs() const noexcept { return x_; }
  std::span<const double> ys() const noexcept { return y_; }
  std::size_t size() const noexcept { return x_.size(); }

  double value(double q) const noexcept {
    if (q <= x_.front()) return y_.front();
    if (q >= x_.back()) return y_.back();
    const std::size_t i = segment(q);
    const double t = (q - x_[i]) / (x_[i + 1] - x_[i]);
    return y_[i] + (y_[i + 1] - y_[i]) * t;
  }

  /// Slope of the active segment. At an interior knot the right segment wins;
  /// outside the span (and at the last knot) the slope is 0.
  double slope(double q) const noexcept {
    if (q < x_.front() || q >= x_.back()) return 0.0;
    const std::size_t i = segment(q);
    return (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  }

 private:
  // Index i with x_[i] <= q < x_[i+1]; requires x_.front() <= q < x_.back().
  std::size_t segment(double q) const noexcept {
    const auto it = std::upper_bound(x_.begin(), x_.end(), q);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
  }

  std::vector<double> x_;
  std::vector<double> y_;
};

}  // namespace vrg
