#include "geigertree/offspring.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace geigertree {

namespace {

constexpr double kBuiltinTableTail = 1e-18;
constexpr std::int64_t kAggregateCutoff = 24;

double neumaier_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

OffspringLaw OffspringLaw::binary() {
  OffspringLaw law;
  law.kind_ = LawKind::Binary;
  law.name_ = "binary";
  law.pmf_ = {0.5, 0.0, 0.5};
  law.tail_mass_ = 0.0;
  law.mean_ = 1.0;
  law.sigma2_ = 1.0;
  law.cdf_ = {0.5, 0.5, 1.0};
  return law;
}

OffspringLaw OffspringLaw::geometric() {
  OffspringLaw law;
  law.kind_ = LawKind::Geometric;
  law.name_ = "geometric";
  double tail = 1.0;  // mass not yet materialized: 2^-k after k entries
  for (std::size_t k = 0; tail >= kBuiltinTableTail; ++k) {
    law.pmf_.push_back(std::ldexp(1.0, -static_cast<int>(k) - 1));
    tail = std::ldexp(1.0, -static_cast<int>(k) - 1);
  }
  law.tail_mass_ = tail;
  law.mean_ = 1.0;
  law.sigma2_ = 2.0;
  double cum = 0.0;
  for (double p : law.pmf_) law.cdf_.push_back(cum += p);
  return law;
}

OffspringLaw OffspringLaw::poisson() {
  OffspringLaw law;
  law.kind_ = LawKind::Poisson;
  law.name_ = "poisson";
  double term = std::exp(-1.0);
  double cum = 0.0;
  for (std::size_t k = 0; 1.0 - cum >= kBuiltinTableTail || k < 4; ++k) {
    law.pmf_.push_back(term);
    cum += term;
    term /= static_cast<double>(k + 1);
  }
  law.tail_mass_ = std::max(0.0, 1.0 - cum);
  law.mean_ = 1.0;
  law.sigma2_ = 1.0;
  double c = 0.0;
  for (double p : law.pmf_) law.cdf_.push_back(c += p);
  return law;
}

OffspringLaw OffspringLaw::custom(std::vector<double> pmf) {
  OffspringLaw law;
  law.kind_ = LawKind::Custom;
  law.name_ = "custom";
  law.pmf_ = std::move(pmf);
  law.finalize_custom();
  return law;
}

void OffspringLaw::finalize_custom() {
  if (pmf_.empty()) throw std::invalid_argument("custom offspring law: empty pmf");
  for (double p : pmf_)
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("custom offspring law: pmf entries must be finite and >= 0");
  std::vector<double> terms(pmf_.begin(), pmf_.end());
  double total = neumaier_sum(terms);
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("custom offspring law: pmf sums to " + std::to_string(total) +
                                ", expected 1 within 1e-12");
  for (std::size_t k = 0; k < pmf_.size(); ++k) terms[k] = static_cast<double>(k) * pmf_[k];
  mean_ = neumaier_sum(terms);
  if (!std::isfinite(mean_))
    throw std::invalid_argument("custom offspring law: offspring mean diverges");
  if (std::abs(mean_ - 1.0) > 1e-10)
    throw std::invalid_argument("offspring law is not critical: measured mean " +
                                std::to_string(mean_) + ", criticality requires 1 within 1e-10");
  for (std::size_t k = 0; k < pmf_.size(); ++k)
    terms[k] = static_cast<double>(k) * static_cast<double>(k - 1) * pmf_[k];
  terms[0] = 0.0;
  sigma2_ = neumaier_sum(terms);
  if (!std::isfinite(sigma2_))
    throw std::invalid_argument("custom offspring law: sigma^2 diverges");
  if (sigma2_ <= 0.0)
    throw std::invalid_argument("custom offspring law: sigma^2 must be positive");
  tail_mass_ = 0.0;
  double cum = 0.0;
  cdf_.clear();
  for (double p : pmf_) cdf_.push_back(cum += p);
}

OffspringLaw OffspringLaw::from_name(std::string_view name, const std::vector<double>& params) {
  if (name == "custom") return custom(params);
  if (!params.empty())
    throw std::invalid_argument("offspring law '" + std::string(name) + "' takes no parameters");
  if (name == "binary") return binary();
  if (name == "geometric") return geometric();
  if (name == "poisson") return poisson();
  throw std::invalid_argument("unknown offspring law '" + std::string(name) +
                              "' (expected binary, geometric, poisson or custom)");
}

double OffspringLaw::gf(double s) const {
  switch (kind_) {
    case LawKind::Binary: return 0.5 * (1.0 + s * s);
    case LawKind::Geometric: return 1.0 / (2.0 - s);
    case LawKind::Poisson: return std::exp(s - 1.0);
    case LawKind::Custom: {
      double acc = 0.0;
      for (std::size_t k = pmf_.size(); k-- > 0;) acc = acc * s + pmf_[k];
      return acc;
    }
  }
  return 0.0;
}

double OffspringLaw::gf_prime(double s) const {
  switch (kind_) {
    case LawKind::Binary: return s;
    case LawKind::Geometric: {
      double d = 2.0 - s;
      return 1.0 / (d * d);
    }
    case LawKind::Poisson: return std::exp(s - 1.0);
    case LawKind::Custom: {
      double acc = 0.0;
      for (std::size_t k = pmf_.size(); k-- > 1;)
        acc = acc * s + static_cast<double>(k) * pmf_[k];
      return acc;
    }
  }
  return 0.0;
}

double OffspringLaw::gf_second(double s) const {
  switch (kind_) {
    case LawKind::Binary: return 1.0;
    case LawKind::Geometric: {
      double d = 2.0 - s;
      return 2.0 / (d * d * d);
    }
    case LawKind::Poisson: return std::exp(s - 1.0);
    case LawKind::Custom: {
      double acc = 0.0;
      for (std::size_t k = pmf_.size(); k-- > 2;)
        acc = acc * s + static_cast<double>(k) * static_cast<double>(k - 1) * pmf_[k];
      return acc;
    }
  }
  return 0.0;
}

double OffspringLaw::survival_map(double w) const {
  switch (kind_) {
    case LawKind::Binary: return w - 0.5 * w * w;        // 1 - (1 + (1-w)^2)/2
    case LawKind::Geometric: return w / (1.0 + w);       // 1 - 1/(1 + w)
    case LawKind::Poisson: return -std::expm1(-w);       // 1 - e^-w
    case LawKind::Custom: {
      // 1 - f(1-w) = w * sum_k p_k sum_{j<k} (1-w)^j, accumulated with
      // compensation; never forms 1 - q.
      const double s = 1.0 - w;
      double series = 0.0, comp = 0.0;
      double geo = 0.0;  // sum_{j<k} s^j
      for (std::size_t k = 0; k < pmf_.size(); ++k) {
        if (k > 0) geo = 1.0 + s * geo;
        double x = pmf_[k] * geo;
        double t = series + x;
        if (std::abs(series) >= std::abs(x))
          comp += (series - t) + x;
        else
          comp += (x - t) + series;
        series = t;
      }
      return w * (series + comp);
    }
  }
  return 0.0;
}

std::int64_t OffspringLaw::sample(Rng& rng) const {
  double u = uniform01(rng);
  for (std::size_t k = 0; k < cdf_.size(); ++k)
    if (u < cdf_[k]) return static_cast<std::int64_t>(k);
  return static_cast<std::int64_t>(cdf_.size()) - 1;
}

GfCache::GfCache(OffspringLaw law, std::size_t horizon) : law_(std::move(law)), horizon_(horizon) {
  q_.resize(horizon + 1);
  surv_.resize(horizon + 1);
  q_[0] = 0.0;
  surv_[0] = 1.0;
  for (std::size_t m = 0; m < horizon; ++m) {
    surv_[m + 1] = law_.survival_map(surv_[m]);
    q_[m + 1] = 1.0 - surv_[m + 1];
  }
  c_.resize(horizon);
  for (std::size_t m = 0; m < horizon; ++m) c_[m] = surv_[m] / surv_[m + 1];

  // Spine-step moments at every horizon index. With q = q_m and running
  // power sums S1 = sum_{j<k} q^j, S2 = sum_{j<=k} j q^{j-1},
  // S3 = sum_{j<=k} j^2 q^{j-1}:
  //   P(W = k) = c p_k S1(k),  E V = c sum_k p_k S2(k), ...
  mean_v_minus_1_.resize(horizon);
  mean_v_minus_1_sq_.resize(horizon);
  mean_x_.resize(horizon);
  mean_x_sq_.resize(horizon);
  const auto pmf = law_.pmf_table();
  for (std::size_t m = 0; m < horizon; ++m) {
    const double q = q_[m];
    const double c = c_[m];
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, qpow = 1.0;
    double ev = 0.0, ev2 = 0.0, ew = 0.0, ew2 = 0.0, evw = 0.0;
    for (std::size_t k = 1; k < pmf.size(); ++k) {
      s1 += qpow;
      s2 += static_cast<double>(k) * qpow;
      s3 += static_cast<double>(k) * static_cast<double>(k) * qpow;
      qpow *= q;
      const double pk = pmf[k];
      if (pk == 0.0) continue;
      const double kk = static_cast<double>(k);
      ev += pk * s2;
      ev2 += pk * s3;
      ew += pk * kk * s1;
      ew2 += pk * kk * kk * s1;
      evw += pk * kk * s2;
    }
    ev *= c;
    ev2 *= c;
    ew *= c;
    ew2 *= c;
    evw *= c;
    mean_v_minus_1_[m] = ev - 1.0;
    mean_v_minus_1_sq_[m] = ev2 - 2.0 * ev + 1.0;
    mean_x_[m] = ew - ev;
    mean_x_sq_[m] = ew2 - 2.0 * evw + ev2;
  }

  fprime_prod1_.resize(horizon + 1);
  if (horizon >= 1) {
    fprime_prod1_[1] = 1.0;
    for (std::size_t m = 1; m < horizon; ++m)
      fprime_prod1_[m + 1] = fprime_prod1_[m] * law_.gf_prime(q_[m]);
  }
}

double GfCache::fprime_ratio(std::size_t a, std::size_t b) const {
  if (a < 1 || a > b || b > horizon_)
    throw std::domain_error("fprime_ratio: need 1 <= a <= b <= horizon");
  return fprime_prod1_[b] / fprime_prod1_[a];
}

TiltedLaw::TiltedLaw(const GfCache& cache, std::size_t m)
    : law_(&cache.law()), m_(m), q_m_(cache.q(m)), q_m1_(cache.q(m + 1)) {
  if (q_m1_ <= 0.0)
    throw std::domain_error("extinction-conditioning impossible: P(Z_{m+1} = 0) = 0");
}

double TiltedLaw::pmf(std::size_t j) const {
  if (m_ == 0) return j == 0 ? 1.0 : 0.0;
  return law_->pmf(j) * std::pow(q_m_, static_cast<double>(j)) / q_m1_;
}

double TiltedLaw::mean() const {
  return law_->gf_prime(q_m_) * q_m_ / q_m1_;
}

std::int64_t TiltedLaw::sample(Rng& rng) const {
  if (m_ == 0) return 0;
  const double u = uniform01(rng) * q_m1_;
  const auto pmf = law_->pmf_table();
  double cum = 0.0, qpow = 1.0;
  std::int64_t last = 0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    const double w = pmf[j] * qpow;
    qpow *= q_m_;
    if (w > 0.0) last = static_cast<std::int64_t>(j);
    cum += w;
    if (u < cum) return static_cast<std::int64_t>(j);
  }
  return last;
}

double spine_step_pmf(const GfCache& cache, std::size_t m, std::int64_t j, std::int64_t k) {
  if (j < 1 || j > k) throw std::domain_error("spine_step_pmf: need 1 <= j <= k");
  const double q = cache.q(m);
  const double qpow = j == 1 ? 1.0 : std::pow(q, static_cast<double>(j - 1));
  return cache.c(m) * cache.law().pmf(static_cast<std::size_t>(k)) * qpow;
}

SpineStep sample_spine_step(const GfCache& cache, std::size_t m, Rng& rng) {
  const auto pmf = cache.law().pmf_table();
  const double q = cache.q(m);
  const double c = cache.c(m);

  // W marginal: P(W = k) = c p_k S_k with S_k = sum_{j<k} q^j grown as
  // S <- 1 + q S, which keeps the walk cancellation-free as q -> 1.
  double u = uniform01(rng);
  double cum = 0.0, s = 0.0;
  std::int64_t w = 0, last_positive = 1;
  for (std::size_t k = 1; k < pmf.size(); ++k) {
    s = 1.0 + q * s;
    const double weight = c * pmf[k] * s;
    if (weight > 0.0) last_positive = static_cast<std::int64_t>(k);
    cum += weight;
    if (u < cum) {
      w = static_cast<std::int64_t>(k);
      break;
    }
  }
  if (w == 0) w = last_positive;  // truncated tail, mass < 1e-18

  SpineStep step;
  step.w = w;
  if (q == 0.0) {
    step.v = 1;
    return step;
  }
  // V | W = k: P(V = j) proportional to q^{j-1} on 1..k.
  double u2 = uniform01(rng);
  double total = 0.0, qpow = 1.0;
  for (std::int64_t j = 0; j < w; ++j) {
    total += qpow;
    qpow *= q;
  }
  double target = u2 * total;
  double acc = 0.0;
  qpow = 1.0;
  for (std::int64_t j = 1; j <= w; ++j) {
    acc += qpow;
    qpow *= q;
    if (target < acc) {
      step.v = j;
      return step;
    }
  }
  step.v = w;
  return step;
}

namespace {

constexpr std::int64_t kBitTrickCutoff = 4096;

std::int64_t sum_binomial(std::int64_t m, double p, Rng& rng) {
  if (p <= 0.0) return 0;
  return std::binomial_distribution<std::int64_t>(m, p)(rng);
}

std::int64_t sum_negative_binomial(std::int64_t m, double success_p, Rng& rng) {
  return std::negative_binomial_distribution<std::int64_t>(m, success_p)(rng);
}

std::int64_t sum_poisson(double mean, Rng& rng) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

// Binomial(m, 1/2) as a popcount of m random bits.
std::int64_t binomial_half(std::int64_t m, Rng& rng) {
  std::int64_t total = 0;
  while (m >= 64) {
    total += std::popcount(rng());
    m -= 64;
  }
  if (m > 0) total += std::popcount(rng() & (~0ULL >> (64 - m)));
  return total;
}

// Failures before the m-th success in fair-coin trials.
std::int64_t negative_binomial_half(std::int64_t m, Rng& rng) {
  std::int64_t failures = 0;
  std::int64_t remaining = m;  // successes still needed
  for (;;) {
    std::uint64_t word = rng();
    const int ones = std::popcount(word);
    if (ones >= remaining) {
      std::int64_t scanned = 0, found = 0;
      while (found < remaining) {
        found += static_cast<std::int64_t>(word & 1);
        word >>= 1;
        ++scanned;
      }
      return failures + scanned - remaining;
    }
    remaining -= ones;
    failures += 64 - ones;
  }
}

}  // namespace

std::int64_t aggregate_offspring_sum_naive(const OffspringLaw& law, std::int64_t m, Rng& rng) {
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < m; ++i) total += law.sample(rng);
  return total;
}

std::int64_t aggregate_offspring_sum_naive(const TiltedLaw& law, std::int64_t m, Rng& rng) {
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < m; ++i) total += law.sample(rng);
  return total;
}

std::int64_t aggregate_offspring_sum(const OffspringLaw& law, std::int64_t m, Rng& rng) {
  if (m <= 0) return 0;
  switch (law.kind()) {
    case LawKind::Binary:
      return 2 * (m <= kBitTrickCutoff ? binomial_half(m, rng) : sum_binomial(m, 0.5, rng));
    case LawKind::Geometric:
      return m <= kBitTrickCutoff ? negative_binomial_half(m, rng)
                                  : sum_negative_binomial(m, 0.5, rng);
    case LawKind::Poisson:
      return m < kAggregateCutoff ? aggregate_offspring_sum_naive(law, m, rng)
                                  : sum_poisson(static_cast<double>(m), rng);
    case LawKind::Custom: break;
  }
  return aggregate_offspring_sum_naive(law, m, rng);
}

std::int64_t aggregate_offspring_sum(const TiltedLaw& law, std::int64_t m, Rng& rng) {
  if (m <= 0) return 0;
  if (law.depth_to_extinction() == 0) return 0;
  if (m < kAggregateCutoff || law.base().kind() == LawKind::Custom)
    return aggregate_offspring_sum_naive(law, m, rng);
  const double q = law.q_m();
  switch (law.base().kind()) {
    case LawKind::Binary: return 2 * sum_binomial(m, law.pmf(2), rng);
    case LawKind::Geometric: return sum_negative_binomial(m, 1.0 - 0.5 * q, rng);
    case LawKind::Poisson: return sum_poisson(static_cast<double>(m) * q, rng);
    case LawKind::Custom: break;
  }
  return aggregate_offspring_sum_naive(law, m, rng);
}

}  // namespace geigertree
