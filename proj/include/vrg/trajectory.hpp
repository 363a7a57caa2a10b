#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vrg/schedule.hpp"

namespace vrg {

enum class ScheduleKind { uniform, quadratic, log_snr, custom };

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view name);

/// A K-step sampling trajectory. Element 0 (k = 1) is the least noisy level;
/// sampling walks the sequence from the back.
struct Trajectory {
  std::vector<double> alpha_bar;
  std::string label;
  ScheduleKind kind = ScheduleKind::custom;

  std::size_t size() const noexcept { return alpha_bar.size(); }
  bool operator==(const Trajectory&) const = default;
};

/// Per-step retention ratios alpha_k = alpha_bar_k / alpha_bar_{k-1}, with
/// alpha_bar_0 = 1.
struct AlphaVector {
  std::vector<double> alpha;

  std::size_t size() const noexcept { return alpha.size(); }
  bool operator==(const AlphaVector&) const = default;
};

/// Throws ErrorKind::invalid_trajectory unless K >= 1, every level lies in
/// (0, 1) and the sequence is strictly decreasing.
void validate(const Trajectory& traj);

AlphaVector alpha_from_alphabar(const Trajectory& traj);
Trajectory alphabar_from_alpha(const AlphaVector& v, std::string label = "",
                               ScheduleKind kind = ScheduleKind::custom);

/// Picks K levels from the dense schedule. uniform and quadratic select
/// integer timesteps on [1, T] (linear or squared spacing); log_snr spaces the
/// half-log-SNR evenly between the schedule's endpoints. Rounding collisions
/// are rejected rather than merged.
Trajectory make_trajectory(const NoiseSchedule& schedule, ScheduleKind kind, int K);

nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

}  // namespace vrg
