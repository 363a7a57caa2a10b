#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vrg {

/// n row-major d-dimensional vectors.
struct Batch {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;

  Batch() = default;
  Batch(std::size_t rows, std::size_t dims) : n(rows), d(dims), values(rows * dims, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * d, d}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * d, d}; }
  bool operator==(const Batch&) const = default;
};

/// Isotropic Gaussian data N(mean, sigma^2 I). sigma = 0 is a point mass.
struct GaussianDataSpec {
  std::vector<double> mean;
  double sigma = 1.0;
};

struct GmmComponent {
  double weight = 1.0;
  std::vector<double> mean;
  double sigma = 1.0;
};

/// Mixture of isotropic Gaussians.
struct GmmDataSpec {
  std::vector<GmmComponent> components;
};

using DataSpec = std::variant<GaussianDataSpec, GmmDataSpec>;

void validate(const GaussianDataSpec& spec);
void validate(const GmmDataSpec& spec);
std::size_t dimension(const DataSpec& spec);

/// Draws n samples; row i depends only on (seed, i).
Batch draw_samples(const DataSpec& spec, std::size_t n, std::uint64_t seed);

struct Moments {
  std::vector<double> mean;
  std::vector<double> covariance;  // d x d row-major
};
Moments analytic_moments(const DataSpec& spec);
Moments empirical_moments(const Batch& batch);

nlohmann::json data_spec_to_json(const DataSpec& spec);
DataSpec data_spec_from_json(const nlohmann::json& j);
DataSpec load_data_spec(const std::filesystem::path& path);

}  // namespace vrg
