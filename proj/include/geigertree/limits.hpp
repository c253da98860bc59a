#pragma once

#include "geigertree/geiger.hpp"

namespace geigertree {
namespace limits {

// Rates of the two exponential limit laws of the scaled left/right parts.
struct LimitSpec {
  double t = 0.5;
  double sigma2 = 1.0;
  double left_rate = 0.0;   // 2 / (t (1-t) sigma^2)
  double right_rate = 0.0;  // 2 / (t sigma^2)

  static LimitSpec make(double t, double sigma2);
};

// CDF of the k-th nested uniform on [a, b]:
//   ((x-a)/(b-a)) sum_{m<k} (1/m!) ln((b-a)/(x-a))^m,
// continuous limit 0 at x = a.
double nested_uniform_cdf(int k, double x, double a = 0.0, double b = 1.0);

// a + (b-a) / 2^k.
double nested_uniform_mean(int k, double a = 0.0, double b = 1.0);

// x / (t x + 1 - t), the increasing bijection of [0,1] carrying the scaled
// left split times onto nested uniforms.
double g_transform(double t, double x);

// Limit CDF of the k-th split time scaled by n, supported on [0, t].
double split_limit_cdf(Side side, int k, double t, double x);

// Limit joint CDF of (left k_l-th, right k_r-th) split times scaled by n.
// Factorizes as the product of the marginal limits.
double joint_split_limit_cdf(int k_l, int k_r, double t, double x, double y);

// Limit CDF of the scaled generation of the most recent common ancestor
// of all generation-nt particles: 1 - (t-x)^2 / (t^2 (1-x)) on [0, t].
double mrca_limit_cdf(double t, double x);

// CDF of the sum of independent exponentials with the two spec rates
// (hypoexponential), the limit of Z_nt / n given survival to n.
double limit_sum_cdf(const LimitSpec& spec, double x);

// Tail exp(-2x / (t (1-t) sigma^2)) of the scaled population of a line
// conditioned to survive nt but die by n.
double l_limit_tail(double t, double sigma2, double x);

// First and second moments of that limit: t(1-t)sigma^2/2 and
// [t(1-t)sigma^2]^2 / 2.
double l_limit_mean(double t, double sigma2);
double l_limit_second_moment(double t, double sigma2);

}  // namespace limits
}  // namespace geigertree
