#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vrg/data.hpp"
#include "vrg/piecewise_linear.hpp"

namespace vrg {

/// Noise predictor eps_theta(x_t, alpha_bar). Implementations are immutable
/// after construction and safe to call concurrently.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual void predict(std::span<const double> x_t, double alpha_bar,
                       std::span<double> eps_out) const = 0;

  /// Row-wise prediction over a batch. The default loops over predict().
  virtual Batch predict_batch(const Batch& x_t, double alpha_bar) const;

  virtual std::string id() const = 0;
  virtual nlohmann::json describe() const = 0;

  std::vector<double> predict_noise(std::span<const double> x_t, double alpha_bar) const;
};

/// Posterior-mean noise predictor for isotropic Gaussian data.
class GaussianDenoiser final : public Denoiser {
 public:
  explicit GaussianDenoiser(GaussianDataSpec spec);

  void predict(std::span<const double> x_t, double alpha_bar,
               std::span<double> eps_out) const override;
  std::string id() const override { return "gaussian-optimal"; }
  nlohmann::json describe() const override;
  const GaussianDataSpec& spec() const noexcept { return spec_; }

 private:
  GaussianDataSpec spec_;
};

/// Posterior-mean noise predictor for a mixture of isotropic Gaussians.
/// Responsibilities are evaluated in the log domain.
class GmmDenoiser final : public Denoiser {
 public:
  explicit GmmDenoiser(GmmDataSpec spec);

  void predict(std::span<const double> x_t, double alpha_bar,
               std::span<double> eps_out) const override;
  std::string id() const override { return "gmm-optimal"; }
  nlohmann::json describe() const override;

 private:
  GmmDataSpec spec_;
};

/// Injected per-dimension error variance as a function of alpha_bar.
struct InjectedErrorCurve {
  std::vector<double> alpha_bar;  // strictly increasing
  std::vector<double> variance;   // >= 0

  static InjectedErrorCurve constant(double variance, double lo = 1e-9, double hi = 1.0 - 1e-9);
  void validate() const;
  /// Linear interpolation; throws ErrorKind::domain outside the knot span.
  double at(double alpha_bar) const;
};

/// Adds N(0, curve(alpha_bar) I) to an inner denoiser's output. The
/// perturbation is a pure function of (seed, x_t, alpha_bar).
class PerturbedDenoiser final : public Denoiser {
 public:
  PerturbedDenoiser(std::shared_ptr<const Denoiser> inner, InjectedErrorCurve curve,
                    std::uint64_t seed);

  void predict(std::span<const double> x_t, double alpha_bar,
               std::span<double> eps_out) const override;
  Batch predict_batch(const Batch& x_t, double alpha_bar) const override;
  std::string id() const override { return "perturbed(" + inner_->id() + ")"; }
  nlohmann::json describe() const override;

 private:
  void perturb(std::span<const double> x_t, double alpha_bar, double variance,
               std::span<double> eps) const;

  std::shared_ptr<const Denoiser> inner_;
  InjectedErrorCurve curve_;
  std::uint64_t seed_;
};

/// Per-dimension prediction error of the optimal Gaussian denoiser,
/// alpha_bar sigma^2 / (alpha_bar sigma^2 + 1 - alpha_bar).
double gaussian_analytic_delta(const GaussianDataSpec& spec, double alpha_bar);

std::unique_ptr<Denoiser> make_optimal_denoiser(const DataSpec& spec);

/// Builds a denoiser from its JSON description: a data spec
/// ({"type": "gaussian" | "gmm"}) yields the optimal denoiser;
/// {"type": "mlp", "weights": path} loads trained weights;
/// {"type": "perturbed", "inner": {...}, "curve": [[alpha_bar, variance], ...],
/// "seed": n} wraps another description. Relative paths resolve against
/// base_dir.
std::shared_ptr<const Denoiser> denoiser_from_json(const nlohmann::json& j,
                                                   const std::filesystem::path& base_dir = {});
std::shared_ptr<const Denoiser> load_denoiser(const std::filesystem::path& path);

}  // namespace vrg
