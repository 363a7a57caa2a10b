#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrg/data.hpp"
#include "vrg/denoiser.hpp"
#include "vrg/trajectory.hpp"

namespace vrg {

/// One deterministic DDIM move from level alpha_bar_t to the less noisy
/// alpha_bar_s: sqrt(s/t) x_t - (sqrt(s/t) sqrt(1 - t) - sqrt(1 - s)) eps_hat.
/// alpha_bar_s = 1 extracts the clean sample.
std::vector<double> ddim_step(std::span<const double> x_t, std::span<const double> eps_hat,
                              double alpha_bar_t, double alpha_bar_s);

struct SampleBatch {
  Batch samples;
  std::uint64_t seed = 0;
  std::string trajectory_label;
  std::string denoiser_id;
};

/// Generates n samples along the trajectory, starting from standard normal
/// noise at its noisiest level and ending with a clean extraction. Sample i's
/// starting noise depends only on (seed, i).
SampleBatch sample(const Denoiser& denoiser, const Trajectory& traj, std::size_t n, std::size_t d,
                   std::uint64_t seed);

/// Starting noise used by sample(): n x d standard normal draws.
Batch initial_noise(std::size_t n, std::size_t d, std::uint64_t seed);

struct PropagationReport {
  double predicted_variance = 0.0;
  double empirical_variance = 0.0;
  double std_error = 0.0;  // standard error of empirical_variance
  std::size_t n_runs = 0;
  std::size_t d = 0;
  double relative_error = 0.0;

  /// Standard error relative to the prediction.
  double relative_std_error() const {
    return predicted_variance > 0 ? std_error / predicted_variance : 0.0;
  }
};

/// Simulates only the error term of the sampling recursion: each step adds
/// -(sqrt(s/t) sqrt(1 - t) - sqrt(1 - s)) zeta_k with zeta_k ~ N(0, delta(t) I)
/// and rescales earlier error by sqrt(s/t). Compares the final per-dimension
/// variance with sum_k w(alpha_bar_k, alpha_k) delta(alpha_bar_k).
PropagationReport propagate_error_mc(const Trajectory& traj,
                                     const std::function<double(double)>& delta_fn,
                                     std::size_t n_runs, std::size_t d, std::uint64_t seed);

nlohmann::json report_to_json(const PropagationReport& report);

void save_batch(const std::filesystem::path& path, const SampleBatch& batch);
SampleBatch load_batch(const std::filesystem::path& path);

}  // namespace vrg
