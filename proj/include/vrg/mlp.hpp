#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "vrg/data.hpp"
#include "vrg/denoiser.hpp"
#include "vrg/schedule.hpp"

namespace vrg {

struct MlpTrainConfig {
  std::vector<int> hidden{64, 64, 64};
  int steps = 20000;
  int batch_size = 256;
  double learning_rate = 2e-3;
  std::uint64_t seed = 0;
};

/// Fully connected SiLU network predicting noise from (x_t, alpha_bar). The
/// noise level enters through its half-log-SNR and a few Fourier features of
/// it.
class MlpDenoiser final : public Denoiser {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
  };

  /// Randomly initialized network (scaled-normal weights, zero biases).
  MlpDenoiser(std::size_t dim, std::vector<int> hidden, std::uint64_t init_seed);
  MlpDenoiser(std::size_t dim, std::vector<int> hidden, std::vector<Layer> layers);

  void predict(std::span<const double> x_t, double alpha_bar,
               std::span<double> eps_out) const override;
  Batch predict_batch(const Batch& x_t, double alpha_bar) const override;
  std::string id() const override { return "mlp"; }
  nlohmann::json describe() const override;

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<int>& hidden() const noexcept { return hidden_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  static constexpr int kTimeFeatures = 7;
  /// Network input for one sample: x followed by the noise-level features.
  static void write_features(std::span<const double> x, double alpha_bar, double* column);

 private:
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;

  std::size_t dim_;
  std::vector<int> hidden_;
  std::vector<Layer> layers_;
};

struct TrainReport {
  std::vector<double> loss;  // per-step minibatch loss
};

/// Trains on the standard noise-prediction objective: t uniform on 1..T,
/// eps ~ N(0, I), minimize the mean squared error of the predicted noise.
/// Optimizer is Adam with cosine learning-rate decay. Throws
/// ErrorKind::numerical if the loss stops being finite.
MlpDenoiser train_mlp_denoiser(const Batch& dataset, const NoiseSchedule& schedule,
                               const MlpTrainConfig& config, TrainReport* report = nullptr);

void save_mlp(const std::filesystem::path& path, const MlpDenoiser& net);
MlpDenoiser load_mlp(const std::filesystem::path& path);

}  // namespace vrg
