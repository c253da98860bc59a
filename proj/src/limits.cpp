#include "geigertree/limits.hpp"

#include <cmath>
#include <stdexcept>

namespace geigertree {
namespace limits {

namespace {

// sum_{m<k} L^m / m! by term recurrence; safe for large k.
double truncated_exp_series(int k, double L) {
  double term = 1.0, sum = 1.0;
  for (int m = 1; m < k; ++m) {
    term *= L / static_cast<double>(m);
    sum += term;
  }
  return sum;
}

void require_unit_interval_params(double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::domain_error("t must lie in (0, 1)");
}

}  // namespace

LimitSpec LimitSpec::make(double t, double sigma2) {
  require_unit_interval_params(t);
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::domain_error("sigma2 must be positive and finite");
  LimitSpec spec;
  spec.t = t;
  spec.sigma2 = sigma2;
  spec.left_rate = 2.0 / (t * (1.0 - t) * sigma2);
  spec.right_rate = 2.0 / (t * sigma2);
  return spec;
}

double nested_uniform_cdf(int k, double x, double a, double b) {
  if (k < 1) throw std::domain_error("nested_uniform_cdf: k must be >= 1");
  if (!(a < b)) throw std::domain_error("nested_uniform_cdf: need a < b");
  if (x < a || x > b) throw std::domain_error("nested_uniform_cdf: x outside [a, b]");
  if (x == a) return 0.0;
  if (x == b) return 1.0;
  const double u = (x - a) / (b - a);
  return u * truncated_exp_series(k, std::log(1.0 / u));
}

double nested_uniform_mean(int k, double a, double b) {
  if (k < 1) throw std::domain_error("nested_uniform_mean: k must be >= 1");
  if (!(a < b)) throw std::domain_error("nested_uniform_mean: need a < b");
  return a + (b - a) * std::ldexp(1.0, -k);
}

double g_transform(double t, double x) {
  require_unit_interval_params(t);
  if (x < 0.0 || x > 1.0) throw std::domain_error("g_transform: x outside [0, 1]");
  return x / (t * x + 1.0 - t);
}

double split_limit_cdf(Side side, int k, double t, double x) {
  require_unit_interval_params(t);
  if (k < 1) throw std::domain_error("split_limit_cdf: k must be >= 1");
  if (x < 0.0 || x > t) throw std::domain_error("split_limit_cdf: x outside [0, t]");
  if (x == 0.0) return 0.0;
  double base, logarg;
  if (side == Side::Left) {
    base = x / (t * (x + 1.0 - t));
    logarg = t * (x + 1.0 - t) / x;
  } else {
    base = x / t;
    logarg = t / x;
  }
  if (base >= 1.0) return 1.0;
  return base * truncated_exp_series(k, std::log(logarg));
}

double joint_split_limit_cdf(int k_l, int k_r, double t, double x, double y) {
  return split_limit_cdf(Side::Left, k_l, t, x) * split_limit_cdf(Side::Right, k_r, t, y);
}

double mrca_limit_cdf(double t, double x) {
  require_unit_interval_params(t);
  if (x < 0.0 || x > t) throw std::domain_error("mrca_limit_cdf: x outside [0, t]");
  const double d = t - x;
  return 1.0 - d * d / (t * t * (1.0 - x));
}

double limit_sum_cdf(const LimitSpec& spec, double x) {
  if (x < 0.0) throw std::domain_error("limit_sum_cdf: x must be >= 0");
  const double lam = spec.left_rate, mu = spec.right_rate;
  if (lam == mu) throw std::domain_error("limit_sum_cdf: rates must differ");
  return 1.0 - (mu * std::exp(-lam * x) - lam * std::exp(-mu * x)) / (mu - lam);
}

double l_limit_tail(double t, double sigma2, double x) {
  require_unit_interval_params(t);
  if (x < 0.0) throw std::domain_error("l_limit_tail: x must be >= 0");
  return std::exp(-2.0 * x / (t * (1.0 - t) * sigma2));
}

double l_limit_mean(double t, double sigma2) {
  return t * (1.0 - t) * sigma2 / 2.0;
}

double l_limit_second_moment(double t, double sigma2) {
  const double m = t * (1.0 - t) * sigma2;
  return m * m / 2.0;
}

}  // namespace limits
}  // namespace geigertree
