#include "vrg/denoiser.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"
#include "vrg/mlp.hpp"
#include "vrg/rng.hpp"

namespace vrg {

namespace {

void check_open_level(double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    fail(ErrorKind::domain, "denoiser: alpha_bar = " + format_double(alpha_bar) +
                                " must lie in the open interval (0, 1)");
  }
}

void check_dims(std::size_t expected, std::span<const double> x, std::span<double> out) {
  if (x.size() != expected || out.size() != expected) {
    fail(ErrorKind::invalid_argument, "denoiser: expected dimension " + std::to_string(expected) +
                                          ", got " + std::to_string(x.size()));
  }
}

// Optimal noise prediction for one isotropic Gaussian component, written into
// out. Shared by the Gaussian and GMM predictors so a one-component mixture
// reproduces the Gaussian result bit for bit.
void gaussian_component_eps(std::span<const double> x, std::span<const double> mean, double sigma,
                            double alpha_bar, std::span<double> out) {
  const double root_ab = std::sqrt(alpha_bar);
  const double scale = std::sqrt(1.0 - alpha_bar) / (alpha_bar * sigma * sigma + 1.0 - alpha_bar);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - root_ab * mean[i]) * scale;
}

}  // namespace

Batch Denoiser::predict_batch(const Batch& x_t, double alpha_bar) const {
  Batch out(x_t.n, x_t.d);
  for (std::size_t r = 0; r < x_t.n; ++r) predict(x_t.row(r), alpha_bar, out.row(r));
  return out;
}

std::vector<double> Denoiser::predict_noise(std::span<const double> x_t, double alpha_bar) const {
  std::vector<double> out(x_t.size());
  predict(x_t, alpha_bar, out);
  return out;
}

GaussianDenoiser::GaussianDenoiser(GaussianDataSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
}

void GaussianDenoiser::predict(std::span<const double> x_t, double alpha_bar,
                               std::span<double> eps_out) const {
  check_open_level(alpha_bar);
  check_dims(spec_.mean.size(), x_t, eps_out);
  gaussian_component_eps(x_t, spec_.mean, spec_.sigma, alpha_bar, eps_out);
}

nlohmann::json GaussianDenoiser::describe() const { return data_spec_to_json(spec_); }

GmmDenoiser::GmmDenoiser(GmmDataSpec spec) : spec_(std::move(spec)) { validate(spec_); }

void GmmDenoiser::predict(std::span<const double> x_t, double alpha_bar,
                          std::span<double> eps_out) const {
  check_open_level(alpha_bar);
  const auto& comps = spec_.components;
  const std::size_t d = comps.front().mean.size();
  check_dims(d, x_t, eps_out);

  const double root_ab = std::sqrt(alpha_bar);
  std::vector<double> log_r(comps.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const double v = alpha_bar * comps[c].sigma * comps[c].sigma + 1.0 - alpha_bar;
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = x_t[i] - root_ab * comps[c].mean[i];
      sq += diff * diff;
    }
    log_r[c] = std::log(comps[c].weight) -
               0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * v) - 0.5 * sq / v;
    max_log = std::max(max_log, log_r[c]);
  }
  double total = 0.0;
  for (auto& lr : log_r) {
    lr = std::exp(lr - max_log);
    total += lr;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    fail(ErrorKind::numerical, "gmm denoiser: responsibilities underflowed");
  }

  std::fill(eps_out.begin(), eps_out.end(), 0.0);
  std::vector<double> component_eps(d);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const double r = log_r[c] / total;
    if (r == 0.0) continue;
    gaussian_component_eps(x_t, comps[c].mean, comps[c].sigma, alpha_bar, component_eps);
    for (std::size_t i = 0; i < d; ++i) eps_out[i] += r * component_eps[i];
  }
}

nlohmann::json GmmDenoiser::describe() const { return data_spec_to_json(spec_); }

InjectedErrorCurve InjectedErrorCurve::constant(double variance, double lo, double hi) {
  return InjectedErrorCurve{{lo, hi}, {variance, variance}};
}

void InjectedErrorCurve::validate() const {
  if (alpha_bar.size() < 2 || alpha_bar.size() != variance.size()) {
    fail(ErrorKind::invalid_argument, "injected error curve needs >= 2 matching knots");
  }
  for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
    if (!(variance[i] >= 0.0) || !std::isfinite(variance[i])) {
      fail(ErrorKind::invalid_argument, "injected error variance must be finite and >= 0");
    }
    if (i > 0 && !(alpha_bar[i] > alpha_bar[i - 1])) {
      fail(ErrorKind::invalid_argument, "injected error knots must be strictly increasing");
    }
  }
}

double InjectedErrorCurve::at(double ab) const {
  if (!(ab >= alpha_bar.front() && ab <= alpha_bar.back())) {
    fail(ErrorKind::domain, "alpha_bar = " + format_double(ab) +
                                " is outside the injected error curve's knot span");
  }
  return PiecewiseLinear(alpha_bar, variance).value(ab);
}

PerturbedDenoiser::PerturbedDenoiser(std::shared_ptr<const Denoiser> inner,
                                     InjectedErrorCurve curve, std::uint64_t seed)
    : inner_(std::move(inner)), curve_(std::move(curve)), seed_(seed) {
  if (!inner_) fail(ErrorKind::invalid_argument, "perturbed denoiser: missing inner denoiser");
  curve_.validate();
}

void PerturbedDenoiser::perturb(std::span<const double> x_t, double alpha_bar, double variance,
                                std::span<double> eps) const {
  if (variance == 0.0) return;
  std::uint64_t key = std::bit_cast<std::uint64_t>(alpha_bar);
  for (double v : x_t) key = mix64(key ^ std::bit_cast<std::uint64_t>(v));
  CounterRng rng(derive_seed(seed_, key));
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(variance);
  for (double& e : eps) e += sd * normal(rng);
}

void PerturbedDenoiser::predict(std::span<const double> x_t, double alpha_bar,
                                std::span<double> eps_out) const {
  const double variance = curve_.at(alpha_bar);
  inner_->predict(x_t, alpha_bar, eps_out);
  perturb(x_t, alpha_bar, variance, eps_out);
}

Batch PerturbedDenoiser::predict_batch(const Batch& x_t, double alpha_bar) const {
  const double variance = curve_.at(alpha_bar);
  Batch out = inner_->predict_batch(x_t, alpha_bar);
  for (std::size_t r = 0; r < x_t.n; ++r) perturb(x_t.row(r), alpha_bar, variance, out.row(r));
  return out;
}

nlohmann::json PerturbedDenoiser::describe() const {
  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t i = 0; i < curve_.alpha_bar.size(); ++i) {
    curve.push_back({curve_.alpha_bar[i], curve_.variance[i]});
  }
  return {{"type", "perturbed"}, {"inner", inner_->describe()}, {"curve", curve}, {"seed", seed_}};
}

double gaussian_analytic_delta(const GaussianDataSpec& spec, double alpha_bar) {
  const double signal = alpha_bar * spec.sigma * spec.sigma;
  const double denom = signal + 1.0 - alpha_bar;
  if (denom == 0.0) return 1.0;  // clean point mass: noise is unidentifiable
  return signal / denom;
}

std::unique_ptr<Denoiser> make_optimal_denoiser(const DataSpec& spec) {
  if (const auto* g = std::get_if<GaussianDataSpec>(&spec)) return std::make_unique<GaussianDenoiser>(*g);
  return std::make_unique<GmmDenoiser>(std::get<GmmDataSpec>(spec));
}

std::shared_ptr<const Denoiser> denoiser_from_json(const nlohmann::json& j,
                                                   const std::filesystem::path& base_dir) {
  std::string type;
  try {
    type = j.at("type").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("denoiser description: ") + e.what());
  }
  if (type == "gaussian" || type == "gmm") return make_optimal_denoiser(data_spec_from_json(j));
  try {
    if (type == "mlp") {
      std::filesystem::path weights = j.at("weights").get<std::string>();
      if (weights.is_relative()) weights = base_dir / weights;
      return std::make_shared<MlpDenoiser>(load_mlp(weights));
    }
    if (type == "perturbed") {
      InjectedErrorCurve curve;
      for (const auto& knot : j.at("curve")) {
        curve.alpha_bar.push_back(knot.at(0).get<double>());
        curve.variance.push_back(knot.at(1).get<double>());
      }
      return std::make_shared<PerturbedDenoiser>(denoiser_from_json(j.at("inner"), base_dir),
                                                 std::move(curve), j.value("seed", std::uint64_t{0}));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("denoiser description: ") + e.what());
  }
  fail(ErrorKind::schema, "denoiser description: unknown type '" + type + "'");
}

std::shared_ptr<const Denoiser> load_denoiser(const std::filesystem::path& path) {
  if (path.extension() == ".bin") return std::make_shared<MlpDenoiser>(load_mlp(path));
  return denoiser_from_json(read_json(path), path.parent_path());
}

}  // namespace vrg
