#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <stdexcept>

#include "doctest.h"

#include "geigertree/limits.hpp"

using namespace geigertree;
namespace lim = geigertree::limits;

TEST_SUITE("limits") {

TEST_CASE("nested uniform cdf and mean") {
  CHECK(lim::nested_uniform_cdf(1, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(lim::nested_uniform_cdf(2, 1.0 / std::exp(1.0)) ==
        doctest::Approx(2.0 / std::exp(1.0)).epsilon(1e-12));
  CHECK(lim::nested_uniform_cdf(7, 1.0) == 1.0);
  CHECK(lim::nested_uniform_cdf(3, 0.0) == 0.0);
  CHECK(lim::nested_uniform_mean(1) == 0.5);
  CHECK(lim::nested_uniform_mean(3) == 0.125);
  CHECK(lim::nested_uniform_mean(2, 2.0, 6.0) == 3.0);
  CHECK_THROWS_AS(lim::nested_uniform_cdf(1, 1.5), std::domain_error);
  CHECK_THROWS_AS(lim::nested_uniform_cdf(0, 0.5), std::domain_error);
  CHECK_THROWS_AS(lim::nested_uniform_cdf(1, 0.5, 1.0, 0.0), std::domain_error);

  // nondecreasing in x; pointwise larger for deeper nesting (the variable
  // shrinks stochastically with k, so its CDF rises); mean halves with k
  for (int k = 1; k <= 5; ++k) {
    double prev = 0.0;
    for (int g = 1; g <= 50; ++g) {
      const double x = g / 50.0;
      const double v = lim::nested_uniform_cdf(k, x);
      CHECK(v >= prev);
      prev = v;
      if (k > 1 && x < 1.0) CHECK(v > lim::nested_uniform_cdf(k - 1, x));
    }
    if (k > 1) CHECK(lim::nested_uniform_mean(k) < lim::nested_uniform_mean(k - 1));
  }

  // mean from the tail integral matches the closed form
  for (int k = 1; k <= 6; ++k) {
    const double mean = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return 1.0 - lim::nested_uniform_cdf(k, x); }, 0.0, 1.0, 12, 1e-13);
    CHECK(std::abs(mean - lim::nested_uniform_mean(k)) < 1e-8);
  }
}

TEST_CASE("g transform") {
  CHECK(lim::g_transform(0.4, 0.0) == 0.0);
  CHECK(lim::g_transform(0.4, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lim::g_transform(0.5, 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(lim::g_transform(0.5, 0.25) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(lim::g_transform(0.5, 1.2), std::domain_error);
  CHECK_THROWS_AS(lim::g_transform(1.0, 0.5), std::domain_error);
  double prev = -1.0;
  for (int g = 0; g <= 40; ++g) {
    const double v = lim::g_transform(0.3, g / 40.0);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("split-time limit laws") {
  CHECK(lim::split_limit_cdf(Side::Right, 1, 0.5, 0.2) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(lim::split_limit_cdf(Side::Left, 1, 0.5, 0.25) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  for (int k = 1; k <= 4; ++k) {
    CHECK(lim::split_limit_cdf(Side::Left, k, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lim::split_limit_cdf(Side::Right, k, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lim::split_limit_cdf(Side::Left, k, 0.5, 0.0) == 0.0);
  }
  CHECK_THROWS_AS(lim::split_limit_cdf(Side::Left, 1, 0.5, 0.6), std::domain_error);

  // consistency with the transformed nested uniforms
  double worst = 0.0;
  for (double t : {0.3, 0.5, 0.7})
    for (int k = 1; k <= 4; ++k)
      for (int g = 1; g <= 20; ++g) {
        const double x = t * g / 20.0;
        worst = std::max(worst, std::abs(lim::split_limit_cdf(Side::Left, k, t, x) -
                                         lim::nested_uniform_cdf(k, lim::g_transform(t, x / t))));
      }
  CHECK(worst < 1e-10);
}

TEST_CASE("joint split law factorizes") {
  CHECK(lim::joint_split_limit_cdf(1, 1, 0.5, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lim::joint_split_limit_cdf(1, 1, 0.5, 0.25, 0.25) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(lim::joint_split_limit_cdf(1, 1, 0.5, 0.25, 0.2) ==
        doctest::Approx(4.0 / 15.0).epsilon(1e-12));
  double worst = 0.0;
  for (int kl = 1; kl <= 2; ++kl)
    for (int kr = 1; kr <= 2; ++kr)
      for (int gx = 0; gx <= 20; ++gx)
        for (int gy = 0; gy <= 20; ++gy) {
          const double x = 0.5 * gx / 20.0, y = 0.5 * gy / 20.0;
          worst = std::max(worst, std::abs(lim::joint_split_limit_cdf(kl, kr, 0.5, x, y) -
                                           lim::split_limit_cdf(Side::Left, kl, 0.5, x) *
                                               lim::split_limit_cdf(Side::Right, kr, 0.5, y)));
        }
  CHECK(worst <= 1e-12);
}

TEST_CASE("mrca limit law") {
  CHECK(lim::mrca_limit_cdf(0.5, 0.0) == 0.0);
  CHECK(lim::mrca_limit_cdf(0.5, 0.25) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(lim::mrca_limit_cdf(0.5, 0.5) == 1.0);
  CHECK_THROWS_AS(lim::mrca_limit_cdf(0.5, 0.6), std::domain_error);

  double worst = 0.0;
  for (double t : {0.3, 0.5, 0.7})
    for (int g = 0; g <= 20; ++g) {
      const double x = t * g / 20.0;
      worst = std::max(worst,
                       std::abs(lim::mrca_limit_cdf(t, x) -
                                (1.0 - lim::joint_split_limit_cdf(1, 1, t, t - x, t - x))));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("hypoexponential limit of the scaled total") {
  const auto spec = lim::LimitSpec::make(0.5, 1.0);
  CHECK(spec.left_rate == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(spec.right_rate == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(spec.left_rate > spec.right_rate);
  CHECK(lim::limit_sum_cdf(spec, 0.0) == 0.0);
  CHECK(lim::limit_sum_cdf(spec, 40.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(lim::limit_sum_cdf(spec, -0.1), std::domain_error);
  CHECK_THROWS_AS(lim::LimitSpec::make(0.5, 0.0), std::domain_error);
  CHECK_THROWS_AS(lim::LimitSpec::make(0.0, 1.0), std::domain_error);

  const double mean = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double x) { return 1.0 - lim::limit_sum_cdf(spec, x); }, 0.0, 80.0, 12, 1e-13);
  CHECK(std::abs(mean - 0.375) < 1e-9);

  double prev = 0.0;
  for (int g = 1; g <= 100; ++g) {
    const double v = lim::limit_sum_cdf(spec, g * 0.02);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("conditioned-line limit tail") {
  CHECK(lim::l_limit_tail(0.5, 1.0, 0.0) == 1.0);
  CHECK(lim::l_limit_tail(0.5, 1.0, 0.125) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  for (double t : {0.25, 0.5, 0.75})
    for (double s2 : {1.0, 2.0}) {
      CHECK(lim::l_limit_tail(t, s2, lim::l_limit_mean(t, s2)) ==
            doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
      CHECK(lim::l_limit_second_moment(t, s2) ==
            doctest::Approx(2.0 * lim::l_limit_mean(t, s2) * lim::l_limit_mean(t, s2))
                .epsilon(1e-12));
    }
}

}  // TEST_SUITE
