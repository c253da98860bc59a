#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "geigertree/geiger.hpp"
#include "geigertree/rng.hpp"

namespace geigertree {
namespace stats {

class SampleSummary {
 public:
  explicit SampleSummary(std::vector<double> values);

  std::size_t count() const { return values_.size(); }
  double mean() const { return mean_; }
  double std_error() const { return std_error_; }
  std::span<const double> sorted() const { return values_; }

 private:
  std::vector<double> values_;
  double mean_ = 0.0;
  double std_error_ = 0.0;
};

// One-sample Kolmogorov-Smirnov sup-distance, both one-sided jumps at
// every sample point.
double ks_statistic(const SampleSummary& sample, const std::function<double(double)>& cdf);

// Asymptotic null band: P(KS > bound) ~ 0.1% at this sample size.
inline double ks_null_band_99_9(std::size_t n) {
  return 1.95 / std::sqrt(static_cast<double>(n));
}

struct Chi2Result {
  double statistic = 0.0;
  int dof = 0;
};

// Pearson independence statistic on a bins x bins grid with
// equiprobable-marginal edges; expected counts from the contingency
// margins, dof = (bins-1)^2. Requires at least 25 bins^2 pairs.
Chi2Result chi2_independence(std::span<const std::pair<double, double>> pairs, int bins);

// 99.9% quantile of the chi-squared law (Wilson-Hilferty, exact enough
// for fixed critical-value testing).
double chi2_critical_99_9(int dof);

// (1/2) sum |a - b| over the union of supports.
double tv_distance(const std::map<std::int64_t, double>& law_a,
                   const std::map<std::int64_t, double>& law_b);

struct ProfilePoint {
  int i = 0;               // generation index of the step i -> i+1... stored as i
  double estimate = 0.0;   // P-hat(running count increases at step i)
  double std_error = 0.0;
  double asymptote = 0.0;  // 1/i (right) or 1/i - 1/(i + n - nt) (left)
};

// Streaming per-generation increase frequencies over many traces sharing
// (n, nt); merging accumulators is commutative.
class SplitProfileAccumulator {
 public:
  SplitProfileAccumulator() = default;
  SplitProfileAccumulator(int n, int nt);

  void add(const DecompositionTrace& trace);
  void merge(const SplitProfileAccumulator& other);
  std::vector<ProfilePoint> profile(Side side) const;
  std::int64_t replicates() const { return replicates_; }

 private:
  int n_ = 0, nt_ = 0;
  std::int64_t replicates_ = 0;
  std::vector<std::int64_t> left_counts_, right_counts_;
};

std::vector<ProfilePoint> split_probability_profile(std::span<const DecompositionTrace> traces,
                                                    Side side);

// Draw N samples of U (X1 + X2) with X_i exponential(rate) and U uniform,
// and return the KS distance to the exponential(rate) CDF; the identity
// characterizes the exponential law.
double exp_characterization_check(double rate, std::size_t n, Rng& rng);

}  // namespace stats
}  // namespace geigertree
