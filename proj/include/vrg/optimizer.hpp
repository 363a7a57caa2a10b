#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "vrg/profiler.hpp"
#include "vrg/trajectory.hpp"

namespace vrg {

struct VrgConfig {
  double gamma = 0.1;        // learning portion: box radius around the base alphas
  double lambda = 1.0;       // weight of the terminal-level regularizer
  double step_size = 1e-3;
  int max_iters = 2000;
  double grad_tolerance = 1e-9;
  double eps_open = 1e-6;    // keeps alphas strictly inside (0, 1)

  /// Default learning portion by step count: 0.1 up to 10 steps, 0.01 beyond.
  static VrgConfig for_steps(std::size_t K);
  void validate() const;
};

struct ObjectiveBreakdown {
  double cpe = 0.0;
  double reg = 0.0;
  double total = 0.0;
  std::vector<double> per_step;  // w_k * f_delta(alpha_bar_k), k = 1..K
};

/// Cumulative prediction error of a candidate alpha vector plus
/// lambda * (alpha_bar*_K - alpha_bar_K)^2 against the base trajectory.
ObjectiveBreakdown objective(const AlphaVector& candidate, const Trajectory& base,
                             const ErrorProfile& profile, double lambda);

/// Analytic gradient of objective().total with respect to each alpha.
std::vector<double> objective_gradient(const AlphaVector& candidate, const Trajectory& base,
                                       const ErrorProfile& profile, double lambda);

/// Cumulative prediction error of a trajectory; the lambda = 0 objective.
double cumulative_prediction_error(const Trajectory& traj, const ErrorProfile& profile);

/// Elementwise clamp to [max(eps, a_k - gamma), min(1 - eps, a_k + gamma)].
AlphaVector project(const AlphaVector& candidate, const AlphaVector& base_alpha, double gamma,
                    double eps_open);

struct OptimizeResult {
  Trajectory trajectory;
  AlphaVector alpha;
  ObjectiveBreakdown base_objective;
  ObjectiveBreakdown best_objective;
  std::vector<ObjectiveBreakdown> trace;  // trace[0] is the starting point
  std::size_t best_iteration = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Projected gradient descent from the base trajectory's alphas with a fixed
/// step. Returns the best iterate visited, so the result never scores worse
/// than the base. If no iterate improves on the start, the base trajectory
/// is returned unchanged.
OptimizeResult optimize(const Trajectory& base, const ErrorProfile& profile, const VrgConfig& config);

/// CSV with columns iter,cpe,reg,total.
void save_trace(const std::filesystem::path& path, const std::vector<ObjectiveBreakdown>& trace);
nlohmann::json config_to_json(const VrgConfig& config);

}  // namespace vrg
