#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "test_support.hpp"
#include "vrg/denoiser.hpp"
#include "vrg/errors.hpp"
#include "vrg/sampler.hpp"
#include "vrg/schedule.hpp"

using namespace vrg;

namespace {

std::vector<double> normals(std::mt19937_64& gen, std::size_t d) {
  std::normal_distribution<double> n;
  std::vector<double> v(d);
  for (double& x : v) x = n(gen);
  return v;
}

}  // namespace

TEST_CASE("ddim step with oracle noise stays on the forward marginal") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(1e-4, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    double t = u(gen), s = u(gen);
    if (t == s) continue;
    if (t > s) std::swap(t, s);
    const auto x0 = normals(gen, 3);
    const auto eps = normals(gen, 3);
    const auto xt = diffuse(x0, t, eps);
    const auto xs = ddim_step(xt, eps, t, s);
    const auto expected = diffuse(x0, s, eps);
    for (std::size_t i = 0; i < 3; ++i) CHECK(xs[i] == doctest::Approx(expected[i]).epsilon(1e-12).scale(1.0));
    const auto clean = ddim_step(xt, eps, t, 1.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(clean[i] == doctest::Approx(x0[i]).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("ddim step is continuous as s approaches t") {
  const std::vector<double> x{0.3, -1.2};
  const std::vector<double> e{0.7, 0.1};
  const auto y = ddim_step(x, e, 0.5, 0.5 + 1e-12);
  CHECK(y[0] == doctest::Approx(x[0]).epsilon(1e-9));
  CHECK(y[1] == doctest::Approx(x[1]).epsilon(1e-9));
}

TEST_CASE("ddim step rejects bad levels") {
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(ddim_step(x, x, 0.5, 0.4), Error);
  CHECK_THROWS_AS(ddim_step(x, x, 0.5, 0.5), Error);
  CHECK_THROWS_AS(ddim_step(x, x, 0.0, 0.5), Error);
  CHECK_THROWS_AS(ddim_step(x, x, 0.5, 1.5), Error);
  const std::vector<double> two{0.0, 1.0};
  CHECK_THROWS_AS(ddim_step(x, two, 0.3, 0.5), Error);
}

TEST_CASE("composed steps with oracle noise reconstruct the clean sample") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto traj = testing::random_trajectory(gen, 2 + trial % 20);
    const auto x0 = normals(gen, 2);
    const auto eps = normals(gen, 2);
    auto x = diffuse(x0, traj.alpha_bar.back(), eps);
    for (std::size_t k = traj.size(); k-- > 0;) {
      const double s = k == 0 ? 1.0 : traj.alpha_bar[k - 1];
      x = ddim_step(x, eps, traj.alpha_bar[k], s);
    }
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(x[i] - x0[i]) < 1e-10);
  }
}

TEST_CASE("gaussian sampling matches the composed affine map") {
  const auto schedule = linear_beta_schedule();
  const auto traj = make_trajectory(schedule, ScheduleKind::uniform, 1000);
  const GaussianDataSpec spec{{1.5}, 0.5};
  const GaussianDenoiser den(spec);
  const std::size_t n = 64;
  const auto batch = sample(den, traj, n, 1, 21);
  const auto z = initial_noise(n, 1, 21);

  // The optimal gaussian predictor is affine in x, so the whole chain is
  // x0 = A z + B.
  double A = 1.0, B = 0.0;
  for (std::size_t k = traj.size(); k-- > 0;) {
    const double t = traj.alpha_bar[k];
    const double s = k == 0 ? 1.0 : traj.alpha_bar[k - 1];
    const double r = std::sqrt(s / t);
    const double c = r * std::sqrt(1 - t) - std::sqrt(1 - s);
    const double g = std::sqrt(1 - t) / (t * spec.sigma * spec.sigma + 1 - t);
    const double slope = r - c * g;
    const double shift = c * g * std::sqrt(t) * spec.mean[0];
    A = slope * A;
    B = slope * B + shift;
  }
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(batch.samples.values[i] == doctest::Approx(A * z.values[i] + B).epsilon(1e-10).scale(1.0));
  }
  // The probability-flow map sends N(0, 1) to the data law.
  CHECK(A == doctest::Approx(spec.sigma).epsilon(0.02));
  CHECK(B == doctest::Approx(spec.mean[0]).epsilon(0.02));
}

TEST_CASE("a point mass is recovered in a single step") {
  const GaussianDenoiser den(GaussianDataSpec{{2.0, -1.0}, 0.0});
  const Trajectory traj{{0.3}, "one", ScheduleKind::custom};
  const auto batch = sample(den, traj, 20, 2, 5);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(batch.samples.row(i)[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(batch.samples.row(i)[1] == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("sampling is deterministic and prefix independent") {
  const GmmDenoiser den(GmmDataSpec{{{0.5, {1.0, 0.0}, 0.3}, {0.5, {-1.0, 0.5}, 0.2}}});
  const auto traj = make_trajectory(linear_beta_schedule(), ScheduleKind::quadratic, 10);
  const auto a = sample(den, traj, 40, 2, 77);
  const auto b = sample(den, traj, 40, 2, 77);
  CHECK(a.samples == b.samples);
  const auto prefix = sample(den, traj, 7, 2, 77);
  for (std::size_t i = 0; i < prefix.samples.values.size(); ++i) {
    CHECK(prefix.samples.values[i] == a.samples.values[i]);
  }
  CHECK(a.denoiser_id == "gmm-optimal");
  CHECK(a.trajectory_label == traj.label);
  const auto other = sample(den, traj, 40, 2, 78);
  CHECK_FALSE(other.samples == a.samples);
}

TEST_CASE("sampling input checks") {
  const GaussianDenoiser den(GaussianDataSpec{{0.0}, 1.0});
  CHECK_THROWS_AS(sample(den, Trajectory{{0.2, 0.5}, "bad", ScheduleKind::custom}, 4, 1, 0), Error);
  CHECK_THROWS_AS(sample(den, Trajectory{{0.5}, "t", ScheduleKind::custom}, 4, 2, 0), Error);
}

TEST_CASE("error propagation with zero error") {
  const auto traj = make_trajectory(linear_beta_schedule(), ScheduleKind::uniform, 10);
  const auto r = propagate_error_mc(traj, [](double) { return 0.0; }, 1000, 2, 1);
  CHECK(r.predicted_variance == 0.0);
  CHECK(r.empirical_variance == 0.0);
}

TEST_CASE("error propagation for a single step") {
  const double ab = 0.4;
  const Trajectory traj{{ab}, "one", ScheduleKind::custom};
  const auto r = propagate_error_mc(traj, [](double) { return 0.3; }, 200000, 1, 2);
  CHECK(r.predicted_variance == doctest::Approx((1 - ab) / ab * 0.3).epsilon(1e-14));
  CHECK(std::abs(r.empirical_variance - r.predicted_variance) < 4 * r.std_error);
}

TEST_CASE("error propagation on a ten-step trajectory") {
  const auto traj = make_trajectory(linear_beta_schedule(), ScheduleKind::quadratic, 10);
  const auto r = propagate_error_mc(traj, [](double ab) { return ab; }, 1000000, 1, 3);
  CHECK(r.n_runs == 1000000);
  CHECK(std::abs(r.relative_error) < 0.02);
  CHECK(std::abs(r.empirical_variance - r.predicted_variance) < 4 * r.std_error);
  const auto again = propagate_error_mc(traj, [](double ab) { return ab; }, 1000000, 1, 3);
  CHECK(again.empirical_variance == r.empirical_variance);
  const auto j = report_to_json(r);
  CHECK(j.at("n_runs") == 1000000);
}

TEST_CASE("sample batch round trip") {
  const GaussianDenoiser den(GaussianDataSpec{{0.0, 1.0, 2.0}, 1.0});
  const auto traj = make_trajectory(linear_beta_schedule(), ScheduleKind::log_snr, 5);
  const auto batch = sample(den, traj, 33, 3, 9);
  const auto path = std::filesystem::temp_directory_path() / "vrg_batch.bin";
  save_batch(path, batch);
  const auto loaded = load_batch(path);
  CHECK(loaded.samples == batch.samples);
  CHECK(loaded.seed == 9);
  CHECK(loaded.trajectory_label == batch.trajectory_label);
  CHECK(loaded.denoiser_id == batch.denoiser_id);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_batch(path), Error);
}
