#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrg/data.hpp"
#include "vrg/denoiser.hpp"
#include "vrg/piecewise_linear.hpp"
#include "vrg/schedule.hpp"

namespace vrg {

struct ProfileKnot {
  double alpha_bar = 0.0;
  double delta = 0.0;
  double std_error = 0.0;  // standard error over dataset samples; 0 if unknown
};

struct ProfileMetadata {
  std::string dataset_id;
  std::string denoiser_id;
  std::size_t dataset_size = 0;
  std::size_t n_draws = 0;
  std::uint64_t seed = 0;
};

/// Measured (alpha_bar, delta) pairs and the piecewise-linear map f_delta
/// through them. Knots are strictly increasing in alpha_bar.
class ErrorProfile {
 public:
  ErrorProfile() = default;
  explicit ErrorProfile(std::vector<ProfileKnot> knots, ProfileMetadata metadata = {});

  /// Convenience constructor from bare (alpha_bar, delta) pairs.
  static ErrorProfile from_points(std::span<const double> alpha_bar, std::span<const double> delta);

  const std::vector<ProfileKnot>& knots() const noexcept { return knots_; }
  const ProfileMetadata& metadata() const noexcept { return metadata_; }
  double min_alpha_bar() const { return knots_.front().alpha_bar; }
  double max_alpha_bar() const { return knots_.back().alpha_bar; }

  /// Linear interpolation between knots, clamped to the end values outside
  /// the span.
  double f_delta(double alpha_bar) const noexcept { return curve_.value(alpha_bar); }
  /// Slope of the active segment (right segment at interior knots, 0 outside
  /// the span).
  double f_delta_slope(double alpha_bar) const noexcept { return curve_.slope(alpha_bar); }

 private:
  std::vector<ProfileKnot> knots_;
  ProfileMetadata metadata_;
  PiecewiseLinear curve_;
};

/// count alpha_bar values evenly spaced in half-log-SNR over the schedule's
/// [alpha_bar_T, alpha_bar_1], ascending.
std::vector<double> default_profile_grid(const NoiseSchedule& schedule, std::size_t count = 64);

/// Measures the per-dimension prediction error at each grid level: every
/// dataset sample is diffused with n_draws fresh noise draws and the squared
/// error of the predicted noise is averaged. The noise for (knot, sample,
/// draw) is derived from the seed, so the result is order independent.
ErrorProfile profile(const Denoiser& denoiser, const Batch& dataset, std::span<const double> grid,
                     std::size_t n_draws, std::uint64_t seed, ProfileMetadata metadata = {});

struct ErrorHistogram {
  static constexpr std::size_t kBins = 200;

  double alpha_bar = 0.0;
  std::size_t dimension = 0;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  double mean = 0.0;
  double mean_std_error = 0.0;
  double variance = 0.0;
  double kurtosis = 0.0;
};

/// Histogram of the scalar residual eps_hat[dim] - eps[dim] over n_total
/// draws, in 200 equal bins over +-4 measured standard deviations. Residuals
/// beyond the range land in the edge bins.
ErrorHistogram error_histogram(const Denoiser& denoiser, const Batch& dataset, double alpha_bar,
                               std::size_t dimension_index, std::size_t n_total, std::uint64_t seed);

nlohmann::json histogram_to_json(const ErrorHistogram& h);

/// CSV "alpha_bar,delta" plus a JSON sidecar at <path>.json holding the
/// metadata and per-knot standard errors.
void save_profile(const std::filesystem::path& path, const ErrorProfile& profile);
ErrorProfile load_profile(const std::filesystem::path& path);

}  // namespace vrg
