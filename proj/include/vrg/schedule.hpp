#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace vrg {

/// Dense training-time noise schedule. Index t = 1..T maps to element t-1.
struct NoiseSchedule {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  /// alpha_bar at integer timestep t in [1, T].
  double alpha_bar_at(int t) const { return alpha_bar.at(static_cast<std::size_t>(t - 1)); }
};

/// Standard DDPM linear-beta schedule; alpha_bar is the cumulative product of
/// (1 - beta).
NoiseSchedule linear_beta_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02);

/// x_t = sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) noise.
std::vector<double> diffuse(std::span<const double> x0, double alpha_bar,
                            std::span<const double> noise);

/// Weight of a step's prediction error in the variance of the final sample:
/// (sqrt(1 - alpha_bar) - sqrt(alpha - alpha_bar))^2 / alpha_bar.
double error_weight(double alpha_bar, double alpha);

/// Half log signal-to-noise ratio, 0.5 * log(alpha_bar / (1 - alpha_bar)).
double half_log_snr(double alpha_bar);
double alpha_bar_from_half_log_snr(double lambda);

nlohmann::json schedule_to_json(const NoiseSchedule& schedule);
/// Only T and the beta endpoints are stored; alpha_bar is recomputed.
NoiseSchedule schedule_from_json(const nlohmann::json& j);

}  // namespace vrg
