#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "geigertree/geiger.hpp"
#include "geigertree/offspring.hpp"

namespace geigertree {
namespace moments {

// Mean fragment size E(Z_i | Z_{i+n-nt} = 0) of one extinction-conditioned
// subtree of the decomposition, evaluated through the product
// (q_{n-nt} / q_{i+n-nt}) prod_{m=n-nt}^{i+n-nt-1} f'(q_m). The factors
// f'(q_m) are kept as running products from index n-nt >= 1 upward, never
// as iterate derivatives from zero (which vanish when p_1 = 0).
double expected_left_fragment(const GfCache& cache, int n, double t, int i);

// Factorial second moment E[Z_i (Z_i - 1) | Z_{i+n-nt} = 0] through the
// varying-environment second-moment sum.
double expected_left_fragment_second(const GfCache& cache, int n, double t, int i);

// a_nt = E of the left part: 1 + sum_i E(V_{n-nt+i} - 1) E(fragment at i-1).
double expected_left_count(const GfCache& cache, int n, double t);

// c_nt = E of the right part: 1 + sum_i E X_{n-nt+i} (ordinary subtrees
// have mean one).
double expected_right_count(const GfCache& cache, int n, double t);

struct ConditionalLaw {
  std::map<std::int64_t, double> pmf;  // P(Z_nt = j | Z_n > 0), j = 1..j_max
  double tail = 0.0;                   // mass beyond j_max plus truncation slack
};

// Exact conditional law by pmf self-convolution:
// P(Z_nt = j | Z_n > 0) = P(Z_nt = j)(1 - q_{n-nt}^j) / (1 - q_n).
ConditionalLaw exact_conditional_law(const GfCache& cache, int n, double t, std::int64_t j_max);

struct LMoments {
  double mean = 0.0;    // b_nt = E(Z_nt | Z_nt > 0, Z_n = 0)
  double second = 0.0;  // E(Z_nt^2 | Z_nt > 0, Z_n = 0)
};

LMoments l_moments_exact(const GfCache& cache, int n, double t);

struct SecondMomentDecomposition {
  double i1 = 0.0;  // cross terms over distinct steps
  double i2 = 0.0;  // squared-mean diagonal weighted by E(V-1)^2
  double i3 = 0.0;  // within-step fragment variance terms
  double second_moment = 0.0;  // E (left part)^2
};

SecondMomentDecomposition second_moment_left_exact(const GfCache& cache, int n, double t);
double second_moment_right_exact(const GfCache& cache, int n, double t);

// Exact P(running count increases at step i), i = 1..nt (entry i-1).
// Increase indicators are independent across steps, which makes every
// split-time law below a Poisson-binomial functional of these values.
std::vector<double> increase_probs_exact(const GfCache& cache, int n, double t, Side side);

// Exact CDF of the k-th split time over m = 0..nt:
// P(G^k <= m) = P(at most k-1 increases at steps above m).
std::vector<double> split_time_cdf_exact(const GfCache& cache, int n, double t, Side side,
                                         int k);

struct MomentReport {
  int n = 0;
  double t = 0.0;
  int nt = 0;
  double sigma2 = 0.0;
  double a_nt = 0.0, c_nt = 0.0, b_nt = 0.0, d_n = 0.0;
  double second_left = 0.0, second_right = 0.0, second_l = 0.0;
  double i_n1 = 0.0, i_n2 = 0.0, i_n3 = 0.0;
  // asymptotic targets of the scaled quantities and relative errors
  double target_a = 0.0, target_c = 0.0, target_b = 0.0;
  double target_second_left = 0.0, target_second_right = 0.0, target_second_l = 0.0;
  double rel_err_a = 0.0, rel_err_c = 0.0, rel_err_b = 0.0;
  double rel_err_second_left = 0.0, rel_err_second_right = 0.0, rel_err_second_l = 0.0;
};

MomentReport moment_report(const GfCache& cache, int n, double t);

}  // namespace moments
}  // namespace geigertree
