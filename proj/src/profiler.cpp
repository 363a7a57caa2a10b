#include "vrg/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"
#include "vrg/parallel.hpp"
#include "vrg/rng.hpp"
#include "vrg/stats.hpp"

namespace vrg {

namespace {

constexpr std::size_t kChunkRows = 8192;
constexpr std::uint64_t kHistogramStream = 0x68697374;

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".json");
}

}  // namespace

ErrorProfile::ErrorProfile(std::vector<ProfileKnot> knots, ProfileMetadata metadata)
    : knots_(std::move(knots)), metadata_(std::move(metadata)) {
  if (knots_.size() < 2) fail(ErrorKind::invalid_argument, "error profile needs >= 2 knots");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto& k = knots_[i];
    if (!(k.alpha_bar > 0.0 && k.alpha_bar < 1.0)) {
      fail(ErrorKind::invalid_argument, "error profile: alpha_bar " + format_double(k.alpha_bar) +
                                            " outside (0, 1)");
    }
    if (!(k.delta >= 0.0) || !std::isfinite(k.delta)) {
      fail(ErrorKind::invalid_argument, "error profile: delta must be finite and >= 0");
    }
    if (i > 0 && !(k.alpha_bar > knots_[i - 1].alpha_bar)) {
      fail(ErrorKind::invalid_argument, "error profile: knots must be strictly increasing in alpha_bar");
    }
    x.push_back(k.alpha_bar);
    y.push_back(k.delta);
  }
  curve_ = PiecewiseLinear(std::move(x), std::move(y));
}

ErrorProfile ErrorProfile::from_points(std::span<const double> alpha_bar, std::span<const double> delta) {
  if (alpha_bar.size() != delta.size()) fail(ErrorKind::invalid_argument, "error profile: size mismatch");
  std::vector<ProfileKnot> knots;
  for (std::size_t i = 0; i < alpha_bar.size(); ++i) knots.push_back({alpha_bar[i], delta[i], 0.0});
  return ErrorProfile(std::move(knots));
}

std::vector<double> default_profile_grid(const NoiseSchedule& schedule, std::size_t count) {
  if (count < 2) fail(ErrorKind::invalid_argument, "profile grid needs >= 2 points");
  const double lo = half_log_snr(schedule.alpha_bar.back());
  const double hi = half_log_snr(schedule.alpha_bar.front());
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(count - 1);
    grid[i] = alpha_bar_from_half_log_snr(lo + (hi - lo) * u);
  }
  grid.front() = schedule.alpha_bar.back();
  grid.back() = schedule.alpha_bar.front();
  return grid;
}

ErrorProfile profile(const Denoiser& denoiser, const Batch& dataset, std::span<const double> grid,
                     std::size_t n_draws, std::uint64_t seed, ProfileMetadata metadata) {
  if (dataset.n == 0) fail(ErrorKind::invalid_argument, "profile: dataset is empty");
  if (n_draws == 0) fail(ErrorKind::invalid_argument, "profile: n_draws must be >= 1");
  std::vector<double> levels(grid.begin(), grid.end());
  std::sort(levels.begin(), levels.end());
  if (levels.size() < 2) fail(ErrorKind::invalid_argument, "profile: grid needs >= 2 levels");
  for (double ab : levels) {
    if (!(ab > 0.0 && ab < 1.0)) {
      fail(ErrorKind::invalid_argument, "profile: grid level " + format_double(ab) + " outside (0, 1)");
    }
  }

  const std::size_t d = dataset.d;
  const std::size_t total = dataset.n * n_draws;
  std::vector<ProfileKnot> knots(levels.size());

  parallel_for(levels.size(), [&](std::size_t g) {
    const double ab = levels[g];
    const double signal = std::sqrt(ab);
    const double noise_scale = std::sqrt(1.0 - ab);
    RunningMoments moments;  // over per-sample means, so draws sharing an x0 count once
    double sample_sum = 0.0;
    Batch x_t;
    std::vector<double> eps;
    for (std::size_t start = 0; start < total; start += kChunkRows) {
      const std::size_t count = std::min(kChunkRows, total - start);
      x_t = Batch(count, d);
      eps.assign(count * d, 0.0);
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t item = start + r;
        const std::size_t sample = item / n_draws;
        const std::size_t draw = item % n_draws;
        CounterRng rng(derive_seed(seed, g, sample, draw));
        std::normal_distribution<double> normal;
        const auto x0 = dataset.row(sample);
        auto xt = x_t.row(r);
        for (std::size_t j = 0; j < d; ++j) {
          eps[r * d + j] = normal(rng);
          xt[j] = signal * x0[j] + noise_scale * eps[r * d + j];
        }
      }
      const Batch eps_hat = denoiser.predict_batch(x_t, ab);
      for (std::size_t r = 0; r < count; ++r) {
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double e = eps_hat.values[r * d + j] - eps[r * d + j];
          sq += e * e;
        }
        const double delta = sq / static_cast<double>(d);
        if (!std::isfinite(delta)) {
          fail(ErrorKind::numerical, "profile: denoiser returned non-finite output at alpha_bar = " +
                                         format_double(ab));
        }
        sample_sum += delta;
        if ((start + r) % n_draws == n_draws - 1) {
          moments.add(sample_sum / static_cast<double>(n_draws));
          sample_sum = 0.0;
        }
      }
    }
    knots[g] = {ab, moments.mean(), moments.standard_error()};
  });

  metadata.dataset_size = dataset.n;
  metadata.n_draws = n_draws;
  metadata.seed = seed;
  if (metadata.denoiser_id.empty()) metadata.denoiser_id = denoiser.id();
  return ErrorProfile(std::move(knots), std::move(metadata));
}

ErrorHistogram error_histogram(const Denoiser& denoiser, const Batch& dataset, double alpha_bar,
                               std::size_t dimension_index, std::size_t n_total, std::uint64_t seed) {
  if (dataset.n == 0) fail(ErrorKind::invalid_argument, "histogram: dataset is empty");
  if (dimension_index >= dataset.d) {
    fail(ErrorKind::invalid_argument, "histogram: dimension index " + std::to_string(dimension_index) +
                                          " out of range for d = " + std::to_string(dataset.d));
  }
  if (n_total < ErrorHistogram::kBins) {
    fail(ErrorKind::invalid_argument, "histogram: n_total = " + std::to_string(n_total) +
                                          " is below the bin count (200)");
  }
  const std::size_t d = dataset.d;
  const double signal = std::sqrt(alpha_bar);
  const double noise_scale = std::sqrt(1.0 - alpha_bar);
  std::vector<double> residuals(n_total);
  for (std::size_t start = 0; start < n_total; start += kChunkRows) {
    const std::size_t count = std::min(kChunkRows, n_total - start);
    Batch x_t(count, d);
    std::vector<double> eps(count * d);
    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t item = start + r;
      CounterRng rng(derive_seed(seed, kHistogramStream, item));
      std::normal_distribution<double> normal;
      const auto x0 = dataset.row(item % dataset.n);
      auto xt = x_t.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        eps[r * d + j] = normal(rng);
        xt[j] = signal * x0[j] + noise_scale * eps[r * d + j];
      }
    }
    const Batch eps_hat = denoiser.predict_batch(x_t, alpha_bar);
    for (std::size_t r = 0; r < count; ++r) {
      residuals[start + r] = eps_hat.values[r * d + dimension_index] - eps[r * d + dimension_index];
    }
  }

  RunningMoments moments;
  for (double r : residuals) {
    if (!std::isfinite(r)) fail(ErrorKind::numerical, "histogram: non-finite residual");
    moments.add(r);
  }
  ErrorHistogram h;
  h.alpha_bar = alpha_bar;
  h.dimension = dimension_index;
  h.total = n_total;
  h.mean = moments.mean();
  h.mean_std_error = moments.standard_error();
  h.variance = moments.variance();
  h.kurtosis = moments.kurtosis();
  const double half_width = h.variance > 0.0 ? 4.0 * std::sqrt(h.variance) : 1.0;
  h.lower = -half_width;
  h.upper = half_width;
  h.counts.assign(ErrorHistogram::kBins, 0);
  const double bin_width = (h.upper - h.lower) / ErrorHistogram::kBins;
  for (double r : residuals) {
    const double pos = std::floor((r - h.lower) / bin_width);
    const auto bin = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(ErrorHistogram::kBins - 1)));
    ++h.counts[bin];
  }
  return h;
}

nlohmann::json histogram_to_json(const ErrorHistogram& h) {
  return {{"alpha_bar", h.alpha_bar}, {"dimension", h.dimension}, {"lower", h.lower},
          {"upper", h.upper},         {"bins", h.counts.size()},   {"counts", h.counts},
          {"total", h.total},         {"mean", h.mean},            {"mean_std_error", h.mean_std_error},
          {"variance", h.variance},   {"kurtosis", h.kurtosis}};
}

void save_profile(const std::filesystem::path& path, const ErrorProfile& profile) {
  std::ostringstream csv;
  csv << "alpha_bar,delta\n";
  nlohmann::json std_errors = nlohmann::json::array();
  for (const auto& k : profile.knots()) {
    csv << format_double(k.alpha_bar) << ',' << format_double(k.delta) << '\n';
    std_errors.push_back(k.std_error);
  }
  write_text(path, csv.str());
  const auto& m = profile.metadata();
  write_json(sidecar_path(path), {{"dataset_id", m.dataset_id},
                                  {"denoiser_id", m.denoiser_id},
                                  {"dataset_size", m.dataset_size},
                                  {"n_draws", m.n_draws},
                                  {"samples_per_knot", m.dataset_size * m.n_draws},
                                  {"seed", m.seed},
                                  {"std_error", std_errors}});
}

ErrorProfile load_profile(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.columns != std::vector<std::string>{"alpha_bar", "delta"}) {
    fail(ErrorKind::schema, path.string() + ": expected header 'alpha_bar,delta'");
  }
  std::vector<ProfileKnot> knots;
  for (const auto& row : table.rows) knots.push_back({row[0], row[1], 0.0});
  ProfileMetadata meta;
  const auto sidecar = sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    const auto j = read_json(sidecar);
    try {
      meta.dataset_id = j.value("dataset_id", "");
      meta.denoiser_id = j.value("denoiser_id", "");
      meta.dataset_size = j.value("dataset_size", std::size_t{0});
      meta.n_draws = j.value("n_draws", std::size_t{0});
      meta.seed = j.value("seed", std::uint64_t{0});
      if (j.contains("std_error")) {
        const auto se = j.at("std_error").get<std::vector<double>>();
        if (se.size() != knots.size()) fail(ErrorKind::schema, sidecar.string() + ": std_error length mismatch");
        for (std::size_t i = 0; i < se.size(); ++i) knots[i].std_error = se[i];
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::schema, sidecar.string() + ": " + e.what());
    }
  }
  try {
    return ErrorProfile(std::move(knots), std::move(meta));
  } catch (const Error& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
}

}  // namespace vrg
