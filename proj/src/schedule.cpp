#include "vrg/schedule.hpp"

#include <cmath>
#include <string>

#include "vrg/errors.hpp"

namespace vrg {

NoiseSchedule linear_beta_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) fail(ErrorKind::invalid_argument, "schedule length T must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
    fail(ErrorKind::invalid_argument,
         "beta endpoints must satisfy 0 < beta_start <= beta_end < 1 (got " +
             std::to_string(beta_start) + ", " + std::to_string(beta_end) + ")");
  }
  NoiseSchedule s;
  s.T = T;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.resize(static_cast<std::size_t>(T));
  s.alpha_bar.resize(static_cast<std::size_t>(T));
  double cumulative = 1.0;
  for (int t = 0; t < T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(T - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    cumulative *= 1.0 - beta;
    if (!(cumulative > 0.0)) fail(ErrorKind::numerical, "alpha_bar underflowed to zero");
    s.beta[static_cast<std::size_t>(t)] = beta;
    s.alpha_bar[static_cast<std::size_t>(t)] = cumulative;
  }
  return s;
}

std::vector<double> diffuse(std::span<const double> x0, double alpha_bar,
                            std::span<const double> noise) {
  if (x0.size() != noise.size()) {
    fail(ErrorKind::invalid_argument, "diffuse: sample has dimension " +
                                          std::to_string(x0.size()) + " but noise has " +
                                          std::to_string(noise.size()));
  }
  if (!(alpha_bar >= 0.0 && alpha_bar <= 1.0)) {
    fail(ErrorKind::domain, "diffuse: alpha_bar must lie in [0, 1]");
  }
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * noise[i];
  return out;
}

double error_weight(double alpha_bar, double alpha) {
  if (!(alpha_bar > 0.0)) fail(ErrorKind::domain, "error_weight: alpha_bar must be > 0");
  if (!(alpha <= 1.0)) fail(ErrorKind::domain, "error_weight: alpha must be <= 1");
  if (alpha_bar > alpha) {
    fail(ErrorKind::domain, "error_weight: alpha_bar exceeds alpha (corrupted trajectory)");
  }
  const double g = std::sqrt(1.0 - alpha_bar) - std::sqrt(alpha - alpha_bar);
  return g * g / alpha_bar;
}

double half_log_snr(double alpha_bar) {
  return 0.5 * (std::log(alpha_bar) - std::log1p(-alpha_bar));
}

double alpha_bar_from_half_log_snr(double lambda) { return 1.0 / (1.0 + std::exp(-2.0 * lambda)); }

nlohmann::json schedule_to_json(const NoiseSchedule& schedule) {
  return {{"T", schedule.T}, {"beta_start", schedule.beta_start}, {"beta_end", schedule.beta_end}};
}

NoiseSchedule schedule_from_json(const nlohmann::json& j) {
  try {
    return linear_beta_schedule(j.at("T").get<int>(), j.at("beta_start").get<double>(),
                                j.at("beta_end").get<double>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("noise schedule: ") + e.what());
  }
}

}  // namespace vrg
