#include "vrg/mlp.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"
#include "vrg/rng.hpp"

namespace vrg {

namespace {

constexpr double kLambdaScale = 6.0;
constexpr std::size_t kChunk = 4096;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<int> layer_widths(std::size_t dim, const std::vector<int>& hidden) {
  std::vector<int> w;
  w.push_back(static_cast<int>(dim) + MlpDenoiser::kTimeFeatures);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(static_cast<int>(dim));
  return w;
}

struct AdamState {
  Eigen::MatrixXd mw, vw;
  Eigen::VectorXd mb, vb;
};

}  // namespace

MlpDenoiser::MlpDenoiser(std::size_t dim, std::vector<int> hidden, std::uint64_t init_seed)
    : dim_(dim), hidden_(std::move(hidden)) {
  if (dim_ == 0) fail(ErrorKind::invalid_argument, "mlp: dimension must be >= 1");
  for (int h : hidden_) {
    if (h < 1) fail(ErrorKind::invalid_argument, "mlp: layer widths must be >= 1");
  }
  const auto widths = layer_widths(dim_, hidden_);
  CounterRng rng(derive_seed(init_seed, 0x6d6c70));
  std::normal_distribution<double> normal;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    const double scale = (last ? 0.1 : 1.0) / std::sqrt(static_cast<double>(widths[l]));
    Layer layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Eigen::VectorXd::Zero(widths[l + 1])};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = scale * normal(rng);
    layers_.push_back(std::move(layer));
  }
}

MlpDenoiser::MlpDenoiser(std::size_t dim, std::vector<int> hidden, std::vector<Layer> layers)
    : dim_(dim), hidden_(std::move(hidden)), layers_(std::move(layers)) {
  const auto widths = layer_widths(dim_, hidden_);
  if (layers_.size() + 1 != widths.size()) fail(ErrorKind::schema, "mlp: layer count mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight.rows() != widths[l + 1] || layers_[l].weight.cols() != widths[l] ||
        layers_[l].bias.size() != widths[l + 1]) {
      fail(ErrorKind::schema, "mlp: layer " + std::to_string(l) + " has the wrong shape");
    }
  }
}

void MlpDenoiser::write_features(std::span<const double> x, double alpha_bar, double* column) {
  std::size_t i = 0;
  for (double v : x) column[i++] = v;
  const double e = half_log_snr(alpha_bar) / kLambdaScale;
  column[i++] = e;
  for (int m = 1; m <= 3; ++m) {
    column[i++] = std::sin(std::numbers::pi * m * e);
    column[i++] = std::cos(std::numbers::pi * m * e);
  }
}

Eigen::MatrixXd MlpDenoiser::forward(const Eigen::MatrixXd& input) const {
  Eigen::MatrixXd a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * a;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      a = z.unaryExpr([](double v) { return v * sigmoid(v); });
    } else {
      a = std::move(z);
    }
  }
  return a;
}

void MlpDenoiser::predict(std::span<const double> x_t, double alpha_bar,
                          std::span<double> eps_out) const {
  if (x_t.size() != dim_ || eps_out.size() != dim_) {
    fail(ErrorKind::invalid_argument, "mlp: expected dimension " + std::to_string(dim_));
  }
  Batch one(1, dim_);
  std::copy(x_t.begin(), x_t.end(), one.values.begin());
  const Batch out = predict_batch(one, alpha_bar);
  std::copy(out.values.begin(), out.values.end(), eps_out.begin());
}

Batch MlpDenoiser::predict_batch(const Batch& x_t, double alpha_bar) const {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    fail(ErrorKind::domain, "mlp: alpha_bar must lie in the open interval (0, 1)");
  }
  if (x_t.d != dim_) fail(ErrorKind::invalid_argument, "mlp: expected dimension " + std::to_string(dim_));
  Batch out(x_t.n, dim_);
  const Eigen::Index features = static_cast<Eigen::Index>(dim_) + kTimeFeatures;
  for (std::size_t start = 0; start < x_t.n; start += kChunk) {
    const std::size_t count = std::min(kChunk, x_t.n - start);
    Eigen::MatrixXd input(features, static_cast<Eigen::Index>(count));
    for (std::size_t r = 0; r < count; ++r) {
      write_features(x_t.row(start + r), alpha_bar, input.col(static_cast<Eigen::Index>(r)).data());
    }
    const Eigen::MatrixXd y = forward(input);
    for (std::size_t r = 0; r < count; ++r) {
      auto dst = out.row(start + r);
      for (std::size_t j = 0; j < dim_; ++j) {
        dst[j] = y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r));
      }
    }
  }
  return out;
}

nlohmann::json MlpDenoiser::describe() const {
  return {{"type", "mlp"}, {"dim", dim_}, {"hidden", hidden_}};
}

MlpDenoiser train_mlp_denoiser(const Batch& dataset, const NoiseSchedule& schedule,
                               const MlpTrainConfig& config, TrainReport* report) {
  if (dataset.n == 0 || dataset.d == 0) fail(ErrorKind::invalid_argument, "train: empty dataset");
  if (config.steps < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
    fail(ErrorKind::invalid_argument, "train: steps >= 0, batch_size >= 1 and learning_rate > 0 required");
  }
  MlpDenoiser net(dataset.d, config.hidden, config.seed);
  auto& layers = net.layers();
  const std::size_t L = layers.size();
  const std::size_t d = dataset.d;
  const Eigen::Index B = config.batch_size;
  const Eigen::Index features = static_cast<Eigen::Index>(d) + MlpDenoiser::kTimeFeatures;

  std::vector<AdamState> adam(L);
  for (std::size_t l = 0; l < L; ++l) {
    adam[l].mw = Eigen::MatrixXd::Zero(layers[l].weight.rows(), layers[l].weight.cols());
    adam[l].vw = adam[l].mw;
    adam[l].mb = Eigen::VectorXd::Zero(layers[l].bias.size());
    adam[l].vb = adam[l].mb;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;

  Eigen::MatrixXd input(features, B);
  Eigen::MatrixXd target(static_cast<Eigen::Index>(d), B);
  std::vector<Eigen::MatrixXd> pre(L), act(L + 1);
  std::vector<double> x0(d), eps(d), xt(d);

  for (int step = 0; step < config.steps; ++step) {
    CounterRng rng(derive_seed(config.seed, 0x747261696e, static_cast<std::uint64_t>(step)));
    std::normal_distribution<double> normal;
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto idx = static_cast<std::size_t>(rng() % dataset.n);
      const int t = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(schedule.T));
      const double ab = schedule.alpha_bar_at(t);
      const auto row = dataset.row(idx);
      for (std::size_t j = 0; j < d; ++j) {
        eps[j] = normal(rng);
        xt[j] = std::sqrt(ab) * row[j] + std::sqrt(1.0 - ab) * eps[j];
        target(static_cast<Eigen::Index>(j), b) = eps[j];
      }
      MlpDenoiser::write_features(xt, ab, input.col(b).data());
    }

    act[0] = input;
    for (std::size_t l = 0; l < L; ++l) {
      pre[l] = layers[l].weight * act[l];
      pre[l].colwise() += layers[l].bias;
      if (l + 1 < L) {
        act[l + 1] = pre[l].unaryExpr([](double v) { return v * sigmoid(v); });
      } else {
        act[l + 1] = pre[l];
      }
    }
    const Eigen::MatrixXd diff = act[L] - target;
    const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
    if (!std::isfinite(loss)) {
      fail(ErrorKind::numerical, "train: loss became non-finite at step " + std::to_string(step) +
                                     " (learning rate " + format_double(config.learning_rate) +
                                     "); lower the learning rate");
    }
    if (report) report->loss.push_back(loss);

    const double progress = config.steps > 1 ? static_cast<double>(step) / (config.steps - 1) : 0.0;
    const double lr = config.learning_rate * (0.1 + 0.9 * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
    const double bc1 = 1.0 - std::pow(beta1, step + 1);
    const double bc2 = 1.0 - std::pow(beta2, step + 1);

    Eigen::MatrixXd grad = diff * (2.0 / static_cast<double>(diff.size()));
    for (std::size_t l = L; l-- > 0;) {
      if (l + 1 < L) {
        grad.array() *= pre[l].unaryExpr([](double v) {
          const double s = sigmoid(v);
          return s * (1.0 + v * (1.0 - s));
        }).array();
      }
      const Eigen::MatrixXd gw = grad * act[l].transpose();
      const Eigen::VectorXd gb = grad.rowwise().sum();
      if (l > 0) grad = layers[l].weight.transpose() * grad;

      auto& s = adam[l];
      s.mw = beta1 * s.mw + (1.0 - beta1) * gw;
      s.vw = beta2 * s.vw + (1.0 - beta2) * gw.cwiseAbs2();
      s.mb = beta1 * s.mb + (1.0 - beta1) * gb;
      s.vb = beta2 * s.vb + (1.0 - beta2) * gb.cwiseAbs2();
      layers[l].weight.array() -=
          lr * (s.mw.array() / bc1) / ((s.vw.array() / bc2).sqrt() + adam_eps);
      layers[l].bias.array() -= lr * (s.mb.array() / bc1) / ((s.vb.array() / bc2).sqrt() + adam_eps);
    }
  }
  return net;
}

void save_mlp(const std::filesystem::path& path, const MlpDenoiser& net) {
  std::vector<double> payload;
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) payload.push_back(layer.weight(r, c));
    }
    payload.insert(payload.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  const nlohmann::json header = {{"format", "vrg-mlp"},
                                 {"version", 1},
                                 {"dim", net.dim()},
                                 {"hidden", net.hidden()},
                                 {"widths", layer_widths(net.dim(), net.hidden())},
                                 {"activation", "silu"},
                                 {"time_features", MlpDenoiser::kTimeFeatures}};
  write_container(path, header, payload);
}

MlpDenoiser load_mlp(const std::filesystem::path& path) {
  const Container c = read_container(path);
  std::size_t dim = 0;
  std::vector<int> hidden;
  try {
    if (c.header.at("format").get<std::string>() != "vrg-mlp") {
      fail(ErrorKind::schema, path.string() + ": not an mlp weight file");
    }
    dim = c.header.at("dim").get<std::size_t>();
    hidden = c.header.at("hidden").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, path.string() + ": " + e.what());
  }
  const auto widths = layer_widths(dim, hidden);
  std::vector<MlpDenoiser::Layer> layers;
  std::size_t pos = 0;
  auto take = [&]() {
    if (pos >= c.payload.size()) fail(ErrorKind::schema, path.string() + ": truncated weights");
    return c.payload[pos++];
  };
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    MlpDenoiser::Layer layer{Eigen::MatrixXd(widths[l + 1], widths[l]), Eigen::VectorXd(widths[l + 1])};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index col = 0; col < layer.weight.cols(); ++col) layer.weight(r, col) = take();
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = take();
    layers.push_back(std::move(layer));
  }
  if (pos != c.payload.size()) fail(ErrorKind::schema, path.string() + ": trailing weight data");
  return MlpDenoiser(dim, std::move(hidden), std::move(layers));
}

}  // namespace vrg
