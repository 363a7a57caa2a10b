#include <doctest.h>

#include <cmath>
#include <random>

#include "vrg/errors.hpp"
#include "vrg/schedule.hpp"

using namespace vrg;

TEST_CASE("diffuse endpoints and a hand-evaluated point") {
  const std::vector<double> x0{2.0, 0.0};
  const std::vector<double> noise{0.0, 2.0};
  CHECK(diffuse(x0, 1.0, noise) == x0);
  CHECK(diffuse(x0, 0.0, noise) == noise);

  const auto mid = diffuse(x0, 0.25, noise);
  CHECK(mid[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mid[1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("diffuse rejects bad input") {
  const std::vector<double> x0{1.0, 2.0};
  const std::vector<double> short_noise{1.0};
  CHECK_THROWS_AS(diffuse(x0, 0.5, short_noise), Error);
  CHECK_THROWS_AS(diffuse(x0, 1.5, x0), Error);
  CHECK_THROWS_AS(diffuse(x0, -0.1, x0), Error);
}

TEST_CASE("diffuse is linear in (x0, noise)") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(3), b(3), c(3), e(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = n(gen);
      b[i] = n(gen);
      c[i] = n(gen);
      e[i] = n(gen);
    }
    const double ab = std::uniform_real_distribution<double>(0, 1)(gen);
    std::vector<double> sum_x(3), sum_n(3);
    for (int i = 0; i < 3; ++i) {
      sum_x[i] = 2.0 * a[i] + c[i];
      sum_n[i] = 2.0 * b[i] + e[i];
    }
    const auto lhs = diffuse(sum_x, ab, sum_n);
    const auto r1 = diffuse(a, ab, b);
    const auto r2 = diffuse(c, ab, e);
    REQUIRE(lhs.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(lhs[i] == doctest::Approx(2.0 * r1[i] + r2[i]).epsilon(1e-12));
  }
}

TEST_CASE("error_weight examples") {
  CHECK(error_weight(0.3, 1.0) == 0.0);
  CHECK(error_weight(0.5, 0.8) == doctest::Approx(0.0508067).epsilon(1e-6));
  const double oracle = std::pow(std::sqrt(0.5) - std::sqrt(0.3), 2) / 0.5;
  CHECK(error_weight(0.5, 0.8) == doctest::Approx(oracle).epsilon(1e-14));
  for (double ab : {0.01, 0.3, 0.77, 0.9999}) {
    CHECK(error_weight(ab, ab) == doctest::Approx((1.0 - ab) / ab).epsilon(1e-12));
  }
}

TEST_CASE("error_weight domain errors") {
  CHECK_THROWS_AS(error_weight(0.6, 0.5), Error);
  CHECK_THROWS_AS(error_weight(0.0, 0.5), Error);
  try {
    error_weight(0.6, 0.5);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
}

TEST_CASE("error_weight is positive below 1 and strictly decreasing in alpha") {
  for (double ab : {1e-4, 0.05, 0.4, 0.9}) {
    double prev = error_weight(ab, ab);
    CHECK(prev > 0.0);
    const int steps = 4000;
    for (int i = 1; i <= steps; ++i) {
      const double a = ab + (1.0 - ab) * i / steps;
      const double w = error_weight(ab, a);
      if (i < steps) CHECK(w > 0.0);
      CHECK(w < prev);
      prev = w;
    }
    CHECK(prev == 0.0);
  }
}

TEST_CASE("linear beta schedule") {
  SUBCASE("single step") {
    const auto s = linear_beta_schedule(1, 0.3, 0.3);
    REQUIRE(s.alpha_bar.size() == 1);
    CHECK(s.alpha_bar[0] == doctest::Approx(0.7));
  }
  SUBCASE("constant beta") {
    const auto s = linear_beta_schedule(2, 0.5, 0.5);
    CHECK(s.alpha_bar == std::vector<double>{0.5, 0.25});
  }
  SUBCASE("defaults reach the magnitude of a 1000-step linear schedule") {
    const auto s = linear_beta_schedule();
    CHECK(s.T == 1000);
    CHECK(s.alpha_bar.back() > 2.0e-5);
    CHECK(s.alpha_bar.back() < 6.0e-5);
    for (std::size_t t = 1; t < s.alpha_bar.size(); ++t) CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
  }
  SUBCASE("ordering violations") {
    CHECK_THROWS_AS(linear_beta_schedule(10, 0.02, 0.01), Error);
    CHECK_THROWS_AS(linear_beta_schedule(10, 0.0, 0.01), Error);
    CHECK_THROWS_AS(linear_beta_schedule(10, 0.01, 1.0), Error);
    CHECK_THROWS_AS(linear_beta_schedule(0, 0.01, 0.02), Error);
  }
  SUBCASE("json stores only the generating constants") {
    const auto s = linear_beta_schedule(50, 1e-3, 0.05);
    const auto j = schedule_to_json(s);
    CHECK_FALSE(j.contains("alpha_bar"));
    const auto back = schedule_from_json(j);
    CHECK(back.alpha_bar == s.alpha_bar);
  }
}

TEST_CASE("half-log-SNR round trip") {
  for (double ab : {1e-5, 0.1, 0.5, 0.99}) {
    CHECK(alpha_bar_from_half_log_snr(half_log_snr(ab)) == doctest::Approx(ab).epsilon(1e-12));
  }
  CHECK(half_log_snr(0.5) == doctest::Approx(0.0));
}
