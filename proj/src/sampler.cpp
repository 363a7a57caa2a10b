#include "vrg/sampler.hpp"

#include <cmath>
#include <random>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"
#include "vrg/parallel.hpp"
#include "vrg/rng.hpp"
#include "vrg/schedule.hpp"
#include "vrg/stats.hpp"

namespace vrg {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365;
constexpr std::uint64_t kPropagateStream = 0x70726f70;
constexpr std::size_t kRunsPerChunk = 4096;

struct StepCoefficients {
  double scale;      // sqrt(s / t)
  double eps_coeff;  // sqrt(s / t) sqrt(1 - t) - sqrt(1 - s)
};

StepCoefficients coefficients(double alpha_bar_t, double alpha_bar_s) {
  if (!(alpha_bar_t > 0.0) || !(alpha_bar_s <= 1.0) || !(alpha_bar_s > alpha_bar_t)) {
    fail(ErrorKind::domain, "ddim_step: requires 0 < alpha_bar_t < alpha_bar_s <= 1 (got t = " +
                                format_double(alpha_bar_t) + ", s = " + format_double(alpha_bar_s) + ")");
  }
  const double scale = std::sqrt(alpha_bar_s / alpha_bar_t);
  return {scale, scale * std::sqrt(1.0 - alpha_bar_t) - std::sqrt(1.0 - alpha_bar_s)};
}

}  // namespace

std::vector<double> ddim_step(std::span<const double> x_t, std::span<const double> eps_hat,
                              double alpha_bar_t, double alpha_bar_s) {
  if (x_t.size() != eps_hat.size()) fail(ErrorKind::invalid_argument, "ddim_step: shape mismatch");
  const auto c = coefficients(alpha_bar_t, alpha_bar_s);
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = c.scale * x_t[i] - c.eps_coeff * eps_hat[i];
  return out;
}

Batch initial_noise(std::size_t n, std::size_t d, std::uint64_t seed) {
  Batch x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(derive_seed(seed, kNoiseStream, i));
    std::normal_distribution<double> normal;
    for (double& v : x.row(i)) v = normal(rng);
  }
  return x;
}

SampleBatch sample(const Denoiser& denoiser, const Trajectory& traj, std::size_t n, std::size_t d,
                   std::uint64_t seed) {
  validate(traj);
  if (d == 0) fail(ErrorKind::invalid_argument, "sample: dimension must be >= 1");
  Batch x = initial_noise(n, d, seed);
  const std::size_t K = traj.size();
  for (std::size_t k = K; k-- > 0;) {
    const double ab_t = traj.alpha_bar[k];
    const double ab_s = k == 0 ? 1.0 : traj.alpha_bar[k - 1];
    const auto c = coefficients(ab_t, ab_s);
    Batch eps;
    try {
      eps = denoiser.predict_batch(x, ab_t);
    } catch (const Error& e) {
      fail(e.kind(), "sample: denoiser failed at step " + std::to_string(k + 1) + ": " + e.what());
    }
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      x.values[i] = c.scale * x.values[i] - c.eps_coeff * eps.values[i];
    }
  }
  return SampleBatch{std::move(x), seed, traj.label, denoiser.id()};
}

PropagationReport propagate_error_mc(const Trajectory& traj,
                                     const std::function<double(double)>& delta_fn,
                                     std::size_t n_runs, std::size_t d, std::uint64_t seed) {
  validate(traj);
  if (n_runs < 2 || d == 0) fail(ErrorKind::invalid_argument, "propagate: need n_runs >= 2 and d >= 1");
  const std::size_t K = traj.size();
  const AlphaVector alpha = alpha_from_alphabar(traj);

  std::vector<StepCoefficients> coeff(K);
  std::vector<double> noise_sd(K);
  PropagationReport report;
  for (std::size_t k = 0; k < K; ++k) {
    const double delta = delta_fn(traj.alpha_bar[k]);
    if (!std::isfinite(delta) || delta < 0.0) {
      fail(ErrorKind::invalid_argument, "propagate: delta at alpha_bar " +
                                            format_double(traj.alpha_bar[k]) + " is not finite and >= 0");
    }
    coeff[k] = coefficients(traj.alpha_bar[k], k == 0 ? 1.0 : traj.alpha_bar[k - 1]);
    noise_sd[k] = std::sqrt(delta);
    report.predicted_variance += error_weight(traj.alpha_bar[k], alpha.alpha[k]) * delta;
  }

  const std::size_t chunks = (n_runs + kRunsPerChunk - 1) / kRunsPerChunk;
  std::vector<RunningMoments> partial(chunks);
  parallel_for(chunks, [&](std::size_t chunk) {
    std::vector<double> e(d);
    const std::size_t end = std::min(n_runs, (chunk + 1) * kRunsPerChunk);
    for (std::size_t run = chunk * kRunsPerChunk; run < end; ++run) {
      CounterRng rng(derive_seed(seed, kPropagateStream, run));
      std::normal_distribution<double> normal;
      std::fill(e.begin(), e.end(), 0.0);
      for (std::size_t k = K; k-- > 0;) {
        for (double& v : e) v = coeff[k].scale * v - coeff[k].eps_coeff * noise_sd[k] * normal(rng);
      }
      for (double v : e) partial[chunk].add(v);
    }
  });
  RunningMoments total;
  for (const auto& p : partial) total.merge(p);

  report.empirical_variance = total.variance();
  report.std_error = total.variance_standard_error();
  report.n_runs = n_runs;
  report.d = d;
  report.relative_error = report.predicted_variance > 0
                              ? std::abs(report.empirical_variance - report.predicted_variance) /
                                    report.predicted_variance
                              : 0.0;
  return report;
}

nlohmann::json report_to_json(const PropagationReport& r) {
  return {{"predicted_variance", r.predicted_variance},
          {"empirical_variance", r.empirical_variance},
          {"std_error", r.std_error},
          {"n_runs", r.n_runs},
          {"d", r.d},
          {"relative_error", r.relative_error}};
}

void save_batch(const std::filesystem::path& path, const SampleBatch& batch) {
  write_container(path,
                  {{"format", "vrg-samples"},
                   {"n", batch.samples.n},
                   {"d", batch.samples.d},
                   {"seed", batch.seed},
                   {"trajectory", batch.trajectory_label},
                   {"denoiser", batch.denoiser_id}},
                  batch.samples.values);
}

SampleBatch load_batch(const std::filesystem::path& path) {
  Container c = read_container(path);
  SampleBatch b;
  try {
    if (c.header.at("format").get<std::string>() != "vrg-samples") {
      fail(ErrorKind::schema, path.string() + ": not a sample batch");
    }
    b.samples.n = c.header.at("n").get<std::size_t>();
    b.samples.d = c.header.at("d").get<std::size_t>();
    b.seed = c.header.at("seed").get<std::uint64_t>();
    b.trajectory_label = c.header.value("trajectory", "");
    b.denoiser_id = c.header.value("denoiser", "");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
  if (c.payload.size() != b.samples.n * b.samples.d) {
    fail(ErrorKind::schema, path.string() + ": payload size does not match n x d");
  }
  b.samples.values = std::move(c.payload);
  return b;
}

}  // namespace vrg
