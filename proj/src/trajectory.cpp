#include "vrg/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"

namespace vrg {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::uniform: return "uniform";
    case ScheduleKind::quadratic: return "quadratic";
    case ScheduleKind::log_snr: return "logSNR";
    case ScheduleKind::custom: return "custom";
  }
  return "custom";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
  if (name == "uniform") return ScheduleKind::uniform;
  if (name == "quadratic") return ScheduleKind::quadratic;
  if (name == "logSNR" || name == "logsnr") return ScheduleKind::log_snr;
  if (name == "custom") return ScheduleKind::custom;
  fail(ErrorKind::invalid_argument, "unknown trajectory kind '" + std::string(name) + "'");
}

void validate(const Trajectory& traj) {
  const auto& ab = traj.alpha_bar;
  if (ab.empty()) fail(ErrorKind::invalid_trajectory, "not a valid trajectory: K must be >= 1");
  for (std::size_t k = 0; k < ab.size(); ++k) {
    if (!(ab[k] > 0.0 && ab[k] < 1.0)) {
      fail(ErrorKind::invalid_trajectory, "not a valid trajectory: alpha_bar[" +
                                              std::to_string(k + 1) + "] = " +
                                              format_double(ab[k]) + " is outside (0, 1)");
    }
    if (k > 0 && !(ab[k] < ab[k - 1])) {
      fail(ErrorKind::invalid_trajectory,
           "not a valid trajectory: alpha_bar must be strictly decreasing (index " +
               std::to_string(k + 1) + ")");
    }
  }
}

AlphaVector alpha_from_alphabar(const Trajectory& traj) {
  validate(traj);
  AlphaVector v;
  v.alpha.resize(traj.size());
  double prev = 1.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    v.alpha[k] = traj.alpha_bar[k] / prev;
    prev = traj.alpha_bar[k];
  }
  return v;
}

Trajectory alphabar_from_alpha(const AlphaVector& v, std::string label, ScheduleKind kind) {
  if (v.alpha.empty()) fail(ErrorKind::invalid_trajectory, "not a valid trajectory: K must be >= 1");
  Trajectory t;
  t.label = std::move(label);
  t.kind = kind;
  t.alpha_bar.resize(v.size());
  double cumulative = 1.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double a = v.alpha[k];
    if (!(a > 0.0 && a < 1.0)) {
      fail(ErrorKind::domain, "alpha[" + std::to_string(k + 1) + "] = " + format_double(a) +
                                  " is outside the open interval (0, 1)");
    }
    cumulative *= a;
    t.alpha_bar[k] = cumulative;
  }
  validate(t);
  return t;
}

Trajectory make_trajectory(const NoiseSchedule& schedule, ScheduleKind kind, int K) {
  if (K < 1) fail(ErrorKind::invalid_argument, "number of steps K must be >= 1");
  if (K > schedule.T) {
    fail(ErrorKind::invalid_argument, "K = " + std::to_string(K) +
                                          " exceeds the schedule length T = " +
                                          std::to_string(schedule.T));
  }
  constexpr int t_min = 1;
  const int T = schedule.T;
  auto fraction = [K](int i) { return K == 1 ? 1.0 : static_cast<double>(i) / (K - 1); };

  Trajectory traj;
  traj.kind = kind;
  traj.label = std::string(to_string(kind)) + "-" + std::to_string(K);
  traj.alpha_bar.reserve(static_cast<std::size_t>(K));

  auto from_timesteps = [&](const std::function<double(double)>& warp) {
    for (int i = 0; i < K; ++i) {
      const double t = t_min + (T - t_min) * warp(fraction(i));
      const int step = std::clamp(static_cast<int>(std::lround(t)), t_min, T);
      traj.alpha_bar.push_back(schedule.alpha_bar_at(step));
    }
  };

  switch (kind) {
    case ScheduleKind::uniform:
      from_timesteps([](double u) { return u; });
      break;
    case ScheduleKind::quadratic:
      from_timesteps([](double u) { return u * u; });
      break;
    case ScheduleKind::log_snr: {
      const double lambda_hi = half_log_snr(schedule.alpha_bar.front());
      const double lambda_lo = half_log_snr(schedule.alpha_bar.back());
      for (int i = 0; i < K; ++i) {
        const double u = fraction(i);
        traj.alpha_bar.push_back(alpha_bar_from_half_log_snr(lambda_hi + (lambda_lo - lambda_hi) * u));
      }
      if (K >= 2) {
        // pin the endpoints to the schedule's exact values
        traj.alpha_bar.front() = schedule.alpha_bar.front();
        traj.alpha_bar.back() = schedule.alpha_bar.back();
      }
      break;
    }
    case ScheduleKind::custom:
      fail(ErrorKind::invalid_argument, "make_trajectory: 'custom' is not a predefined schedule");
  }

  std::sort(traj.alpha_bar.begin(), traj.alpha_bar.end(), std::greater<>());
  if (std::adjacent_find(traj.alpha_bar.begin(), traj.alpha_bar.end()) != traj.alpha_bar.end()) {
    fail(ErrorKind::invalid_trajectory,
         "not a valid trajectory: " + traj.label +
             " selects the same timestep twice after rounding; use fewer steps");
  }
  validate(traj);
  return traj;
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  return {{"label", traj.label}, {"kind", std::string(to_string(traj.kind))},
          {"alpha_bar", traj.alpha_bar}};
}

Trajectory trajectory_from_json(const nlohmann::json& j) {
  Trajectory t;
  try {
    t.label = j.at("label").get<std::string>();
    t.kind = schedule_kind_from_string(j.at("kind").get<std::string>());
    t.alpha_bar = j.at("alpha_bar").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("trajectory file: ") + e.what());
  }
  validate(t);
  return t;
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  write_json(path, trajectory_to_json(traj));
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_json(read_json(path));
}

}  // namespace vrg
