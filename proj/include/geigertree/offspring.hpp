#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geigertree/rng.hpp"

namespace geigertree {

enum class LawKind { Binary, Geometric, Poisson, Custom };

// A critical offspring distribution: mean 1, variance sigma2 in (0, inf).
// Infinite-support built-ins are materialized up to a tail mass below
// 1e-18; the dropped mass is tracked in tail_mass(). Generating-function
// values use closed forms for the built-ins and table sums for custom laws.
class OffspringLaw {
 public:
  static OffspringLaw binary();     // p0 = p2 = 1/2, sigma2 = 1
  static OffspringLaw geometric();  // pk = 2^-(k+1), sigma2 = 2
  static OffspringLaw poisson();    // pk = e^-1 / k!, sigma2 = 1
  static OffspringLaw custom(std::vector<double> pmf);
  // build_law: name in {binary, geometric, poisson, custom}; params is the
  // explicit pmf table for custom and must be empty otherwise.
  static OffspringLaw from_name(std::string_view name, const std::vector<double>& params);

  LawKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double pmf(std::size_t k) const { return k < pmf_.size() ? pmf_[k] : 0.0; }
  std::span<const double> pmf_table() const { return pmf_; }
  std::size_t support_limit() const { return pmf_.size(); }
  double tail_mass() const { return tail_mass_; }
  bool finite_support() const { return kind_ == LawKind::Binary || kind_ == LawKind::Custom; }
  double mean() const { return mean_; }
  double sigma2() const { return sigma2_; }

  double gf(double s) const;         // f(s) = E s^xi
  double gf_prime(double s) const;   // f'(s)
  double gf_second(double s) const;  // f''(s)

  // Survival-form step w -> 1 - f(1 - w). Evaluated without forming
  // 1 - q: closed forms for built-ins, compensated power-sum for custom.
  double survival_map(double w) const;

  // One draw via inverse CDF over the table.
  std::int64_t sample(Rng& rng) const;

 private:
  OffspringLaw() = default;
  void finalize_custom();

  LawKind kind_ = LawKind::Custom;
  std::string name_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  double tail_mass_ = 0.0;
  double mean_ = 0.0;
  double sigma2_ = 0.0;
};

// Iterated generating-function cache over a fixed horizon:
//   q[m]    = P(Z_m = 0), computed through the survival recursion
//   surv[m] = P(Z_m > 0)
//   c[m]    = surv[m] / surv[m+1]
// plus the first two moments of the spine-step pair (V_{m+1}, W_{m+1})
// with joint law c_m p_k q_m^{j-1} (1 <= j <= k), and partial products
// of f'(q_j) for the conditioned-fragment mean formulas.
class GfCache {
 public:
  GfCache(OffspringLaw law, std::size_t horizon);

  const OffspringLaw& law() const { return law_; }
  std::size_t horizon() const { return horizon_; }

  double q(std::size_t m) const { return q_[m]; }
  double surv(std::size_t m) const { return surv_[m]; }
  double c(std::size_t m) const { return c_[m]; }

  double mean_v_minus_1(std::size_t m) const { return mean_v_minus_1_[m]; }
  double mean_v_minus_1_sq(std::size_t m) const { return mean_v_minus_1_sq_[m]; }
  double mean_x(std::size_t m) const { return mean_x_[m]; }
  double mean_x_sq(std::size_t m) const { return mean_x_sq_[m]; }

  double fprime_at_q(std::size_t m) const { return law_.gf_prime(q_[m]); }
  // prod_{j=a}^{b-1} f'(q_j) for 1 <= a <= b <= horizon. Index 0 is
  // excluded from the stored products because f'(q_0) = p_1 may be zero.
  double fprime_ratio(std::size_t a, std::size_t b) const;

 private:
  OffspringLaw law_;
  std::size_t horizon_ = 0;
  std::vector<double> q_, surv_, c_;
  std::vector<double> mean_v_minus_1_, mean_v_minus_1_sq_, mean_x_, mean_x_sq_;
  std::vector<double> fprime_prod1_;  // fprime_prod1_[m] = prod_{j=1}^{m-1} f'(q_j), m >= 1
};

inline GfCache extinction_probs(OffspringLaw law, std::size_t horizon) {
  return GfCache(std::move(law), horizon);
}

// Offspring law of an extinction-conditioned line with m generations left
// to forced extinction: pmf_hat(j) = p_j q_m^j / q_{m+1}. At m = 0 this is
// the point mass at zero.
class TiltedLaw {
 public:
  TiltedLaw(const GfCache& cache, std::size_t m);

  std::size_t depth_to_extinction() const { return m_; }
  const OffspringLaw& base() const { return *law_; }
  double q_m() const { return q_m_; }
  double pmf(std::size_t j) const;
  double mean() const;  // f'(q_m) q_m / q_{m+1}
  std::int64_t sample(Rng& rng) const;

 private:
  const OffspringLaw* law_;
  std::size_t m_;
  double q_m_, q_m1_;
};

// P(V_{m+1} = j, W_{m+1} = k) = c_m p_k q_m^{j-1} for 1 <= j <= k.
double spine_step_pmf(const GfCache& cache, std::size_t m, std::int64_t j, std::int64_t k);

struct SpineStep {
  std::int64_t v = 1;  // rank of the spine child among its siblings
  std::int64_t w = 1;  // sibship size
  std::int64_t x() const { return w - v; }
};

// Exact draw of (V_{m+1}, W_{m+1}): inverse CDF on the W marginal
// c_m p_k sum_{j<k} q_m^j, then V | W = k truncated-geometric in q_m.
SpineStep sample_spine_step(const GfCache& cache, std::size_t m, Rng& rng);

// Sum of m i.i.d. offspring draws. Uses a closed-form sum law per kind
// (binomial / negative binomial / Poisson) above a small-count cutoff and
// per-draw sampling below it; custom laws always draw per particle.
std::int64_t aggregate_offspring_sum(const OffspringLaw& law, std::int64_t m, Rng& rng);
std::int64_t aggregate_offspring_sum(const TiltedLaw& law, std::int64_t m, Rng& rng);

// Per-draw path regardless of kind; kept for cross-validation of the
// closed-form route.
std::int64_t aggregate_offspring_sum_naive(const OffspringLaw& law, std::int64_t m, Rng& rng);
std::int64_t aggregate_offspring_sum_naive(const TiltedLaw& law, std::int64_t m, Rng& rng);

}  // namespace geigertree
