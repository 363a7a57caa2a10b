#pragma once

#include <cstdint>

#include <json.hpp>

#include "vrg/data.hpp"
#include "vrg/profiler.hpp"
#include "vrg/trajectory.hpp"

namespace vrg {

/// sum_k w(alpha_bar_k, alpha_k) f_delta(alpha_bar_k).
double cpe(const Trajectory& traj, const ErrorProfile& profile);

/// 1-D 2-Wasserstein distance between two empirical samples. Equal sizes
/// pair sorted values; otherwise both quantile functions are linearly
/// interpolated on max(n_a, n_b) midpoint levels.
double wasserstein_1d(std::vector<double> a, std::vector<double> b);

/// Mean over random unit directions of the 1-D 2-Wasserstein distance between
/// the projected batches. Direction p depends only on (seed, p).
double sliced_wasserstein(const Batch& a, const Batch& b, std::size_t n_projections,
                          std::uint64_t seed);

struct MomentErrors {
  double mean_error = 0.0;  // Euclidean norm of the mean difference
  double cov_error = 0.0;   // Frobenius norm of the covariance difference
};
MomentErrors moment_diagnostics(const Batch& batch, const DataSpec& reference);

struct EvalReport {
  double swd = 0.0;
  double mean_error = 0.0;
  double cov_error = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t n_projections = 0;
  std::uint64_t seed = 0;
};
nlohmann::json eval_report_to_json(const EvalReport& report);

}  // namespace vrg
