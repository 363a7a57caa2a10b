#include "vrg/data.hpp"

#include <cmath>
#include <random>

#include "vrg/errors.hpp"
#include "vrg/io.hpp"
#include "vrg/rng.hpp"

namespace vrg {

void validate(const GaussianDataSpec& spec) {
  if (spec.mean.empty()) fail(ErrorKind::invalid_argument, "gaussian spec: mean must be nonempty");
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
    fail(ErrorKind::invalid_argument, "gaussian spec: sigma must be finite and >= 0");
  }
}

void validate(const GmmDataSpec& spec) {
  if (spec.components.empty()) fail(ErrorKind::invalid_argument, "gmm spec: no components");
  const std::size_t d = spec.components.front().mean.size();
  if (d == 0) fail(ErrorKind::invalid_argument, "gmm spec: empty component mean");
  double total = 0.0;
  for (const auto& c : spec.components) {
    if (c.mean.size() != d) fail(ErrorKind::invalid_argument, "gmm spec: inconsistent dimensions");
    if (!(c.weight > 0.0)) fail(ErrorKind::invalid_argument, "gmm spec: weights must be positive");
    if (!(c.sigma >= 0.0)) fail(ErrorKind::invalid_argument, "gmm spec: sigma must be >= 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    fail(ErrorKind::invalid_argument, "gmm spec: weights sum to " + format_double(total) + ", not 1");
  }
}

std::size_t dimension(const DataSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GaussianDataSpec>) {
          return s.mean.size();
        } else {
          return s.components.empty() ? 0 : s.components.front().mean.size();
        }
      },
      spec);
}

Batch draw_samples(const DataSpec& spec, std::size_t n, std::uint64_t seed) {
  std::visit([](const auto& s) { validate(s); }, spec);
  const std::size_t d = dimension(spec);
  Batch out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(derive_seed(seed, i));
    std::normal_distribution<double> normal;
    auto row = out.row(i);
    if (const auto* g = std::get_if<GaussianDataSpec>(&spec)) {
      for (std::size_t j = 0; j < d; ++j) row[j] = g->mean[j] + g->sigma * normal(rng);
    } else {
      const auto& comps = std::get<GmmDataSpec>(spec).components;
      const double u = rng.uniform();
      std::size_t pick = comps.size() - 1;
      double acc = 0.0;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        acc += comps[c].weight;
        if (u < acc) {
          pick = c;
          break;
        }
      }
      const auto& c = comps[pick];
      for (std::size_t j = 0; j < d; ++j) row[j] = c.mean[j] + c.sigma * normal(rng);
    }
  }
  return out;
}

Moments analytic_moments(const DataSpec& spec) {
  const std::size_t d = dimension(spec);
  Moments m{std::vector<double>(d, 0.0), std::vector<double>(d * d, 0.0)};
  if (const auto* g = std::get_if<GaussianDataSpec>(&spec)) {
    m.mean = g->mean;
    for (std::size_t i = 0; i < d; ++i) m.covariance[i * d + i] = g->sigma * g->sigma;
    return m;
  }
  // law of total covariance: E[Cov | c] + Cov(E[x | c])
  const auto& comps = std::get<GmmDataSpec>(spec).components;
  for (const auto& c : comps) {
    for (std::size_t i = 0; i < d; ++i) m.mean[i] += c.weight * c.mean[i];
  }
  for (const auto& c : comps) {
    for (std::size_t i = 0; i < d; ++i) {
      m.covariance[i * d + i] += c.weight * c.sigma * c.sigma;
      for (std::size_t j = 0; j < d; ++j) {
        m.covariance[i * d + j] += c.weight * (c.mean[i] - m.mean[i]) * (c.mean[j] - m.mean[j]);
      }
    }
  }
  return m;
}

Moments empirical_moments(const Batch& batch) {
  const std::size_t d = batch.d;
  Moments m{std::vector<double>(d, 0.0), std::vector<double>(d * d, 0.0)};
  if (batch.n == 0) return m;
  for (std::size_t r = 0; r < batch.n; ++r) {
    const auto x = batch.row(r);
    for (std::size_t i = 0; i < d; ++i) m.mean[i] += x[i];
  }
  for (auto& v : m.mean) v /= static_cast<double>(batch.n);
  for (std::size_t r = 0; r < batch.n; ++r) {
    const auto x = batch.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        m.covariance[i * d + j] += (x[i] - m.mean[i]) * (x[j] - m.mean[j]);
      }
    }
  }
  const double denom = batch.n > 1 ? static_cast<double>(batch.n - 1) : 1.0;
  for (auto& v : m.covariance) v /= denom;
  return m;
}

nlohmann::json data_spec_to_json(const DataSpec& spec) {
  if (const auto* g = std::get_if<GaussianDataSpec>(&spec)) {
    return {{"type", "gaussian"}, {"mean", g->mean}, {"sigma", g->sigma}};
  }
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : std::get<GmmDataSpec>(spec).components) {
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"sigma", c.sigma}});
  }
  return {{"type", "gmm"}, {"components", comps}};
}

DataSpec data_spec_from_json(const nlohmann::json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "gaussian") {
      GaussianDataSpec g{j.at("mean").get<std::vector<double>>(), j.at("sigma").get<double>()};
      validate(g);
      return g;
    }
    if (type == "gmm") {
      GmmDataSpec m;
      for (const auto& c : j.at("components")) {
        m.components.push_back({c.at("weight").get<double>(),
                                c.at("mean").get<std::vector<double>>(), c.at("sigma").get<double>()});
      }
      validate(m);
      return m;
    }
    fail(ErrorKind::schema, "data spec: unknown type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string("data spec: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::schema, std::string("data spec: ") + e.what());
  }
}

DataSpec load_data_spec(const std::filesystem::path& path) {
  return data_spec_from_json(read_json(path));
}

}  // namespace vrg
