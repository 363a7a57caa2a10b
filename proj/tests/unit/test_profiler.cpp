#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "vrg/denoiser.hpp"
#include "vrg/errors.hpp"
#include "vrg/profiler.hpp"

using namespace vrg;

TEST_CASE("f_delta interpolation") {
  const std::vector<double> x{0.2, 0.5, 0.8};
  const std::vector<double> y{0.1, 0.7, 0.4};
  const auto p = ErrorProfile::from_points(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(p.f_delta(x[i]) == y[i]);
  CHECK(p.f_delta(0.35) == doctest::Approx(0.4));
  CHECK(p.f_delta(0.65) == doctest::Approx(0.55));
  CHECK(p.f_delta(0.01) == 0.1);
  CHECK(p.f_delta(0.99) == 0.4);

  // continuity across knots
  for (double knot : x) {
    CHECK(p.f_delta(std::nextafter(knot, 0.0)) == doctest::Approx(p.f_delta(knot)).epsilon(1e-12));
    CHECK(p.f_delta(std::nextafter(knot, 1.0)) == doctest::Approx(p.f_delta(knot)).epsilon(1e-12));
  }
}

TEST_CASE("f_delta_slope") {
  const auto single = ErrorProfile::from_points(std::vector<double>{0.2, 0.8}, std::vector<double>{0.1, 0.4});
  for (double q : {0.2, 0.21, 0.5, 0.79}) CHECK(single.f_delta_slope(q) == doctest::Approx(0.5));
  CHECK(single.f_delta_slope(0.9) == 0.0);
  CHECK(single.f_delta_slope(0.1) == 0.0);

  const auto two = ErrorProfile::from_points(std::vector<double>{0.2, 0.5, 0.8}, std::vector<double>{0.1, 0.7, 0.4});
  CHECK(two.f_delta_slope(0.5) == doctest::Approx(-1.0));  // right segment at the knot
  CHECK(two.f_delta_slope(0.4999) == doctest::Approx(2.0));
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(ErrorProfile::from_points(std::vector<double>{0.5}, std::vector<double>{0.1}), Error);
  CHECK_THROWS_AS(ErrorProfile::from_points(std::vector<double>{0.5, 0.4}, std::vector<double>{0.1, 0.2}), Error);
  CHECK_THROWS_AS(ErrorProfile::from_points(std::vector<double>{0.1, 0.4}, std::vector<double>{0.1, -0.2}), Error);
  CHECK_THROWS_AS(ErrorProfile::from_points(std::vector<double>{0.0, 0.4}, std::vector<double>{0.1, 0.2}), Error);
}

TEST_CASE("profiling the exact gaussian denoiser recovers delta = alpha_bar") {
  const GaussianDataSpec spec{{0.0, 0.0}, 1.0};
  GaussianDenoiser denoiser(spec);
  const Batch data = draw_samples(spec, 12'500, 1);
  const std::vector<double> grid{0.1, 0.5, 0.9};
  const auto p = profile(denoiser, data, grid, 8, 42);
  REQUIRE(p.knots().size() == 3);
  for (const auto& k : p.knots()) {
    CHECK(k.std_error > 0.0);
    CHECK(std::abs(k.delta - k.alpha_bar) < 3.0 * k.std_error);
  }
  CHECK(p.metadata().dataset_size == 12'500);
  CHECK(p.metadata().n_draws == 8);
}

TEST_CASE("injected error on point-mass data is measured additively") {
  const GaussianDataSpec point{{1.0, -1.0}, 0.0};
  auto exact = std::make_shared<GaussianDenoiser>(point);
  const double c = 0.2;
  PerturbedDenoiser noisy(exact, InjectedErrorCurve::constant(c), 5);
  const Batch data = draw_samples(point, 1000, 1);
  const std::vector<double> grid{0.05, 0.5, 0.95};
  const auto p = profile(noisy, data, grid, 20, 3);
  for (const auto& k : p.knots()) {
    const double intrinsic = gaussian_analytic_delta(point, k.alpha_bar);
    CHECK(intrinsic == 0.0);
    CHECK(std::abs(k.delta - (intrinsic + c)) < 3.0 * k.std_error);
  }
}

TEST_CASE("profile preconditions") {
  GaussianDenoiser denoiser({{0.0}, 1.0});
  const Batch data = draw_samples(GaussianDataSpec{{0.0}, 1.0}, 10, 1);
  const std::vector<double> grid{0.2, 0.4};
  CHECK_THROWS_AS(profile(denoiser, data, grid, 0, 1), Error);
  CHECK_THROWS_AS(profile(denoiser, Batch{}, grid, 1, 1), Error);
  CHECK_THROWS_AS(profile(denoiser, data, std::vector<double>{0.2, 1.0}, 1, 1), Error);
}

TEST_CASE("profile is deterministic and partition independent") {
  const GaussianDataSpec spec{{0.5}, 0.7};
  GaussianDenoiser denoiser(spec);
  const Batch data = draw_samples(spec, 8000, 9);
  const std::vector<double> grid{0.05, 0.3, 0.8};
  const auto whole = profile(denoiser, data, grid, 4, 11);
  const auto again = profile(denoiser, data, grid, 4, 11);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(whole.knots()[i].delta == again.knots()[i].delta);

  Batch first(4000, 1), second(4000, 1);
  std::copy(data.values.begin(), data.values.begin() + 4000, first.values.begin());
  std::copy(data.values.begin() + 4000, data.values.end(), second.values.begin());
  const auto a = profile(denoiser, first, grid, 4, 11);
  const auto b = profile(denoiser, second, grid, 4, 12);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double merged = 0.5 * (a.knots()[i].delta + b.knots()[i].delta);
    const double se = 0.5 * std::hypot(a.knots()[i].std_error, b.knots()[i].std_error);
    CHECK(std::abs(merged - whole.knots()[i].delta) < 3.0 * std::hypot(se, whole.knots()[i].std_error));
  }
}

TEST_CASE("train and test datasets give matching profiles") {
  const GaussianDataSpec spec{{0.0, 1.0}, 1.3};
  GaussianDenoiser denoiser(spec);
  const Batch train = draw_samples(spec, 10'000, 100);
  const Batch test = draw_samples(spec, 10'000, 200);
  const auto grid = default_profile_grid(linear_beta_schedule(), 16);
  const auto a = profile(denoiser, train, grid, 4, 1);
  const auto b = profile(denoiser, test, grid, 4, 2);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double se = std::hypot(a.knots()[i].std_error, b.knots()[i].std_error);
    CHECK(std::abs(a.knots()[i].delta - b.knots()[i].delta) < 3.0 * se);
  }
}

TEST_CASE("default grid is log-SNR even and spans the schedule") {
  const auto schedule = linear_beta_schedule();
  const auto grid = default_profile_grid(schedule);
  REQUIRE(grid.size() == 64);
  CHECK(grid.front() == schedule.alpha_bar.back());
  CHECK(grid.back() == schedule.alpha_bar.front());
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
  const double step = half_log_snr(grid[2]) - half_log_snr(grid[1]);
  CHECK(half_log_snr(grid[40]) - half_log_snr(grid[39]) == doctest::Approx(step).epsilon(1e-9));
}

TEST_CASE("error histogram") {
  const GaussianDataSpec spec{{0.0, 0.0}, 1.0};
  auto exact = std::make_shared<GaussianDenoiser>(spec);
  const Batch data = draw_samples(spec, 5000, 4);

  SUBCASE("exact denoiser residuals are centred") {
    const auto h = error_histogram(*exact, data, 0.5, 1, 100'000, 3);
    CHECK(h.counts.size() == 200);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0}) == h.total);
    CHECK(std::abs(h.mean) < 3.0 * h.mean_std_error);
    CHECK(h.lower == doctest::Approx(-h.upper));
    CHECK(h.upper == doctest::Approx(4.0 * std::sqrt(h.variance)));
  }
  SUBCASE("a dominant injected error sets the variance") {
    const double c = 100.0;
    PerturbedDenoiser noisy(exact, InjectedErrorCurve::constant(c), 8);
    const auto h = error_histogram(noisy, data, 0.3, 0, 100'000, 5);
    CHECK(std::abs(h.variance - c) < 0.05 * c);
  }
  SUBCASE("undersampled or out-of-range requests") {
    CHECK_THROWS_AS(error_histogram(*exact, data, 0.5, 0, 100, 1), Error);
    CHECK_THROWS_AS(error_histogram(*exact, data, 0.5, 2, 1000, 1), Error);
  }
}

TEST_CASE("profile files round trip") {
  const GaussianDataSpec spec{{0.0}, 1.0};
  GaussianDenoiser denoiser(spec);
  const Batch data = draw_samples(spec, 500, 1);
  ProfileMetadata meta;
  meta.dataset_id = "gauss";
  const auto p = profile(denoiser, data, std::vector<double>{0.013, 0.27, 0.731}, 3, 19, meta);
  const auto path = std::filesystem::temp_directory_path() / "vrg_profile_roundtrip.csv";
  save_profile(path, p);
  const auto back = load_profile(path);
  REQUIRE(back.knots().size() == p.knots().size());
  for (std::size_t i = 0; i < p.knots().size(); ++i) {
    CHECK(back.knots()[i].alpha_bar == p.knots()[i].alpha_bar);
    CHECK(back.knots()[i].delta == p.knots()[i].delta);
    CHECK(back.knots()[i].std_error == p.knots()[i].std_error);
  }
  CHECK(back.metadata().dataset_id == "gauss");
  CHECK(back.metadata().seed == 19);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}
