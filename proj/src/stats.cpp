#include "geigertree/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace geigertree {
namespace stats {

SampleSummary::SampleSummary(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("SampleSummary: empty sample");
  std::sort(values_.begin(), values_.end());
  double sum = 0.0;
  for (double v : values_) sum += v;
  mean_ = sum / static_cast<double>(values_.size());
  double ss = 0.0;
  for (double v : values_) ss += (v - mean_) * (v - mean_);
  const auto n = static_cast<double>(values_.size());
  std_error_ = values_.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
}

double ks_statistic(const SampleSummary& sample, const std::function<double(double)>& cdf) {
  const auto xs = sample.sorted();
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  return d;
}

Chi2Result chi2_independence(std::span<const std::pair<double, double>> pairs, int bins) {
  if (bins < 2) throw std::invalid_argument("chi2_independence: bins must be >= 2");
  const auto n = static_cast<std::int64_t>(pairs.size());
  if (n < 25LL * bins * bins)
    throw std::invalid_argument("chi2_independence: too few pairs for " + std::to_string(bins) +
                                " bins (need at least 25 bins^2)");

  std::vector<double> xs(pairs.size()), ys(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    xs[i] = pairs[i].first;
    ys[i] = pairs[i].second;
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  auto edges = [&](const std::vector<double>& sorted) {
    std::vector<double> e(bins - 1);
    for (int b = 1; b < bins; ++b)
      e[b - 1] = sorted[static_cast<std::size_t>(
          static_cast<double>(sorted.size()) * static_cast<double>(b) / bins)];
    return e;
  };
  const auto ex = edges(xs), ey = edges(ys);
  auto bin_of = [bins](const std::vector<double>& e, double v) {
    int b = 0;
    while (b < bins - 1 && v >= e[b]) ++b;
    return b;
  };

  std::vector<std::int64_t> counts(static_cast<std::size_t>(bins) * bins, 0);
  std::vector<std::int64_t> row(bins, 0), col(bins, 0);
  for (const auto& [x, y] : pairs) {
    const int bx = bin_of(ex, x), by = bin_of(ey, y);
    ++counts[static_cast<std::size_t>(bx) * bins + by];
    ++row[bx];
    ++col[by];
  }
  double statistic = 0.0;
  for (int bx = 0; bx < bins; ++bx)
    for (int by = 0; by < bins; ++by) {
      const double expected = static_cast<double>(row[bx]) * static_cast<double>(col[by]) /
                              static_cast<double>(n);
      if (expected < 5.0)
        throw std::invalid_argument(
            "chi2_independence: expected cell count below 5; use fewer bins or more pairs");
      const double obs = static_cast<double>(counts[static_cast<std::size_t>(bx) * bins + by]);
      statistic += (obs - expected) * (obs - expected) / expected;
    }
  return {statistic, (bins - 1) * (bins - 1)};
}

double chi2_critical_99_9(int dof) {
  if (dof < 1) throw std::invalid_argument("chi2_critical_99_9: dof must be >= 1");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), 0.999);
}

double tv_distance(const std::map<std::int64_t, double>& law_a,
                   const std::map<std::int64_t, double>& law_b) {
  double total = 0.0;
  auto ia = law_a.begin();
  auto ib = law_b.begin();
  while (ia != law_a.end() || ib != law_b.end()) {
    if (ib == law_b.end() || (ia != law_a.end() && ia->first < ib->first)) {
      total += std::abs(ia->second);
      ++ia;
    } else if (ia == law_a.end() || ib->first < ia->first) {
      total += std::abs(ib->second);
      ++ib;
    } else {
      total += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * total;
}

SplitProfileAccumulator::SplitProfileAccumulator(int n, int nt)
    : n_(n), nt_(nt), left_counts_(nt + 1, 0), right_counts_(nt + 1, 0) {}

void SplitProfileAccumulator::add(const DecompositionTrace& trace) {
  if (trace.n != n_ || trace.nt != nt_)
    throw std::invalid_argument("SplitProfileAccumulator: trace (n, nt) mismatch");
  ++replicates_;
  for (int i = 1; i <= nt_; ++i) {
    if (trace.left_running[i] > trace.left_running[i - 1]) ++left_counts_[i];
    if (trace.right_running[i] > trace.right_running[i - 1]) ++right_counts_[i];
  }
}

void SplitProfileAccumulator::merge(const SplitProfileAccumulator& other) {
  if (other.replicates_ == 0) return;
  if (replicates_ == 0) {
    *this = other;
    return;
  }
  if (other.n_ != n_ || other.nt_ != nt_)
    throw std::invalid_argument("SplitProfileAccumulator: merge (n, nt) mismatch");
  replicates_ += other.replicates_;
  for (int i = 0; i <= nt_; ++i) {
    left_counts_[i] += other.left_counts_[i];
    right_counts_[i] += other.right_counts_[i];
  }
}

std::vector<ProfilePoint> SplitProfileAccumulator::profile(Side side) const {
  if (replicates_ == 0)
    throw std::logic_error("SplitProfileAccumulator: no replicates accumulated");
  const auto& counts = side == Side::Left ? left_counts_ : right_counts_;
  std::vector<ProfilePoint> out;
  out.reserve(std::max(nt_ - 1, 0));
  const auto n_rep = static_cast<double>(replicates_);
  // Point i covers the increase running[i] -> running[i+1], produced by
  // siblings whose subtrees are i generations old at the observation
  // level; the asymptotic rate is 1/i on the right and
  // 1/i - 1/(i + n - nt) on the left.
  for (int i = 1; i <= nt_ - 1; ++i) {
    ProfilePoint p;
    p.i = i;
    p.estimate = static_cast<double>(counts[i + 1]) / n_rep;
    p.std_error = std::sqrt(std::max(p.estimate * (1.0 - p.estimate), 1e-300) / n_rep);
    const double inv = 1.0 / static_cast<double>(i);
    p.asymptote =
        side == Side::Right ? inv : inv - 1.0 / static_cast<double>(i + n_ - nt_);
    out.push_back(p);
  }
  return out;
}

std::vector<ProfilePoint> split_probability_profile(std::span<const DecompositionTrace> traces,
                                                    Side side) {
  if (traces.empty()) throw std::invalid_argument("split_probability_profile: no traces");
  SplitProfileAccumulator acc(traces.front().n, traces.front().nt);
  for (const auto& tr : traces) acc.add(tr);
  return acc.profile(side);
}

double exp_characterization_check(double rate, std::size_t n, Rng& rng) {
  if (n < 10'000) throw std::invalid_argument("exp_characterization_check: need N >= 1e4");
  if (!(rate > 0.0)) throw std::invalid_argument("exp_characterization_check: rate must be > 0");
  std::vector<double> values(n);
  for (auto& v : values) {
    const double x1 = -std::log(1.0 - uniform01(rng)) / rate;
    const double x2 = -std::log(1.0 - uniform01(rng)) / rate;
    v = uniform01(rng) * (x1 + x2);
  }
  SampleSummary sample(std::move(values));
  return ks_statistic(sample, [rate](double x) { return -std::expm1(-rate * x); });
}

}  // namespace stats
}  // namespace geigertree
