#include "vrg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vrg/errors.hpp"
#include "vrg/optimizer.hpp"
#include "vrg/parallel.hpp"
#include "vrg/rng.hpp"

namespace vrg {

namespace {

constexpr std::uint64_t kProjectionStream = 0x73776470;

// Quantile of sorted data at level q in (0, 1), with sample i at level
// (i + 0.5) / n and constant extension beyond the outermost samples.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size()) - 0.5;
  if (pos <= 0.0) return sorted.front();
  const auto last = static_cast<double>(sorted.size() - 1);
  if (pos >= last) return sorted.back();
  const auto i = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(i);
  return sorted[i] + (sorted[i + 1] - sorted[i]) * t;
}

}  // namespace

double cpe(const Trajectory& traj, const ErrorProfile& profile) {
  return cumulative_prediction_error(traj, profile);
}

double wasserstein_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::invalid_argument, "wasserstein: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sum = 0.0;
  if (a.size() == b.size()) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum / static_cast<double>(a.size()));
  }
  const std::size_t m = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    const double diff = quantile(a, q) - quantile(b, q);
    sum += diff * diff;
  }
  return std::sqrt(sum / static_cast<double>(m));
}

double sliced_wasserstein(const Batch& a, const Batch& b, std::size_t n_projections,
                          std::uint64_t seed) {
  if (a.d != b.d) {
    fail(ErrorKind::invalid_argument, "sliced_wasserstein: dimension mismatch (" + std::to_string(a.d) +
                                          " vs " + std::to_string(b.d) + ")");
  }
  if (a.n == 0 || b.n == 0) fail(ErrorKind::invalid_argument, "sliced_wasserstein: empty batch");
  if (n_projections == 0) fail(ErrorKind::invalid_argument, "sliced_wasserstein: no projections");
  const std::size_t d = a.d;
  std::vector<double> per_projection(n_projections);
  parallel_for(n_projections, [&](std::size_t p) {
    CounterRng rng(derive_seed(seed, kProjectionStream, p));
    std::normal_distribution<double> normal;
    std::vector<double> dir(d);
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (double& v : dir) {
        v = normal(rng);
        norm += v * v;
      }
    }
    norm = std::sqrt(norm);
    for (double& v : dir) v /= norm;
    auto project_batch = [&](const Batch& x) {
      std::vector<double> out(x.n);
      for (std::size_t i = 0; i < x.n; ++i) {
        const auto row = x.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * dir[j];
        out[i] = s;
      }
      return out;
    };
    per_projection[p] = wasserstein_1d(project_batch(a), project_batch(b));
  });
  double total = 0.0;
  for (double w : per_projection) total += w;
  return total / static_cast<double>(n_projections);
}

MomentErrors moment_diagnostics(const Batch& batch, const DataSpec& reference) {
  if (batch.d != dimension(reference)) fail(ErrorKind::invalid_argument, "moments: dimension mismatch");
  const Moments ref = analytic_moments(reference);
  const Moments emp = empirical_moments(batch);
  MomentErrors out;
  double sq = 0.0;
  for (std::size_t i = 0; i < ref.mean.size(); ++i) sq += (emp.mean[i] - ref.mean[i]) * (emp.mean[i] - ref.mean[i]);
  out.mean_error = std::sqrt(sq);
  sq = 0.0;
  for (std::size_t i = 0; i < ref.covariance.size(); ++i) {
    sq += (emp.covariance[i] - ref.covariance[i]) * (emp.covariance[i] - ref.covariance[i]);
  }
  out.cov_error = std::sqrt(sq);
  return out;
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
  return {{"swd", r.swd},         {"mean_error", r.mean_error}, {"cov_error", r.cov_error},
          {"n_a", r.n_a},         {"n_b", r.n_b},               {"n_projections", r.n_projections},
          {"seed", r.seed}};
}

}  // namespace vrg
