#include "geigertree/moments.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "geigertree/geiger.hpp"
#include "geigertree/limits.hpp"

namespace geigertree {
namespace moments {

namespace {

struct Kahan {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

void check_args(const GfCache& cache, int n, double t, int i) {
  const int nt = scaled_generation(n, t);
  if (i < 0 || i > nt) throw std::domain_error("fragment index i outside [0, nt]");
  if (cache.horizon() < static_cast<std::size_t>(n))
    throw std::domain_error("cache horizon below n");
  if (cache.law().pmf(0) <= 0.0)
    throw std::domain_error("extinction-conditioning impossible: p_0 = 0");
}

}  // namespace

double expected_left_fragment(const GfCache& cache, int n, double t, int i) {
  check_args(cache, n, t, i);
  if (i == 0) return 1.0;
  const int nt = scaled_generation(n, t);
  const std::size_t a = static_cast<std::size_t>(n - nt);
  const std::size_t b = a + static_cast<std::size_t>(i);
  return cache.q(a) / cache.q(b) * cache.fprime_ratio(a, b);
}

double expected_left_fragment_second(const GfCache& cache, int n, double t, int i) {
  check_args(cache, n, t, i);
  if (i == 0) return 0.0;
  const int nt = scaled_generation(n, t);
  const std::size_t a = static_cast<std::size_t>(n - nt);
  const std::size_t b = a + static_cast<std::size_t>(i);
  const auto& law = cache.law();
  // E[Z(Z-1)] = (q_a^2 / q_b) R(b) sum_{r=a}^{b-1} f''(q_r) R(r) / f'(q_r),
  // with R(m) = prod_{j=a}^{m-1} f'(q_j).
  Kahan acc;
  double running = 1.0;
  for (std::size_t r = a; r < b; ++r) {
    const double fp = law.gf_prime(cache.q(r));
    acc.add(law.gf_second(cache.q(r)) * running / fp);
    running *= fp;
  }
  return cache.q(a) * cache.q(a) / cache.q(b) * running * acc.value();
}

double expected_left_count(const GfCache& cache, int n, double t) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("expected_left_count: floor(n t) must be >= 1");
  check_args(cache, n, t, 0);
  const std::size_t a = static_cast<std::size_t>(n - nt);
  Kahan acc;
  double fragment = 1.0;  // E fragment at i - 1, updated multiplicatively
  for (int i = 1; i <= nt; ++i) {
    const std::size_t m = a + static_cast<std::size_t>(i) - 1;
    acc.add(cache.mean_v_minus_1(m) * fragment);
    fragment *= cache.fprime_at_q(m) * cache.q(m) / cache.q(m + 1);
  }
  return 1.0 + acc.value();
}

double expected_right_count(const GfCache& cache, int n, double t) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("expected_right_count: floor(n t) must be >= 1");
  if (cache.horizon() < static_cast<std::size_t>(n))
    throw std::domain_error("cache horizon below n");
  const std::size_t a = static_cast<std::size_t>(n - nt);
  Kahan acc;
  for (int i = 1; i <= nt; ++i) acc.add(cache.mean_x(a + static_cast<std::size_t>(i) - 1));
  return 1.0 + acc.value();
}

namespace {

// pmf of Z_g for an ordinary line, by repeated mixture of i.i.d.-sum
// convolutions; per-generation truncation mass accumulates into *dropped.
std::vector<double> generation_pmf(const OffspringLaw& law, int gens, double step_tail,
                                   double* dropped) {
  std::vector<double> cur{0.0, 1.0};  // Z_0 = 1
  const auto offspring = law.pmf_table();
  *dropped = law.tail_mass() * gens;  // offspring-table truncation, per step bound
  for (int g = 0; g < gens; ++g) {
    // conv_z = offspring pmf convolved z times; accumulate mixture weights.
    std::vector<double> next(1, 0.0);
    std::vector<double> conv{1.0};
    for (std::size_t z = 0; z < cur.size(); ++z) {
      if (cur[z] > 0.0) {
        if (next.size() < conv.size()) next.resize(conv.size(), 0.0);
        for (std::size_t j = 0; j < conv.size(); ++j) next[j] += cur[z] * conv[j];
      }
      if (z + 1 < cur.size()) {
        std::vector<double> grown(conv.size() + offspring.size() - 1, 0.0);
        for (std::size_t a = 0; a < conv.size(); ++a) {
          if (conv[a] == 0.0) continue;
          for (std::size_t b = 0; b < offspring.size(); ++b)
            grown[a + b] += conv[a] * offspring[b];
        }
        // trim the high tail to keep supports bounded
        double tail = 0.0;
        std::size_t keep = grown.size();
        while (keep > 1 && tail + grown[keep - 1] < step_tail) tail += grown[--keep];
        grown.resize(keep);
        *dropped += tail;
        conv = std::move(grown);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

ConditionalLaw exact_conditional_law(const GfCache& cache, int n, double t, std::int64_t j_max) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("exact_conditional_law: floor(n t) must be >= 1");
  if (cache.horizon() < static_cast<std::size_t>(n))
    throw std::domain_error("exact_conditional_law: cache horizon below n");
  if (j_max < 1) throw std::domain_error("exact_conditional_law: j_max must be >= 1");

  double dropped = 0.0;
  const std::vector<double> pz = generation_pmf(cache.law(), nt, 1e-14, &dropped);

  const double q_gap = cache.q(static_cast<std::size_t>(n - nt));
  const double surv_n = cache.surv(static_cast<std::size_t>(n));
  ConditionalLaw law;
  double covered = 0.0;
  for (std::int64_t j = 1; j < static_cast<std::int64_t>(pz.size()) && j <= j_max; ++j) {
    const double base = pz[static_cast<std::size_t>(j)];
    if (base <= 0.0) continue;
    const double qj = std::pow(q_gap, static_cast<double>(j));
    const double val = base * (1.0 - qj) / surv_n;
    law.pmf[j] = val;
    covered += val;
  }
  law.tail = std::max(0.0, 1.0 - covered) + dropped / surv_n;
  if (law.tail > 1e-6)
    throw std::domain_error("exact_conditional_law: tail mass above 1e-6 at j_max; raise j_max");
  return law;
}

LMoments l_moments_exact(const GfCache& cache, int n, double t) {
  const int nt = scaled_generation(n, t);
  check_args(cache, n, t, nt);
  const double q_nt = cache.q(static_cast<std::size_t>(nt));
  const double q_n = cache.q(static_cast<std::size_t>(n));
  if (!(q_nt < q_n)) throw std::domain_error("l_moments_exact: requires q_nt < q_n");
  const double scale = q_n / (q_n - q_nt);
  const double m1 = expected_left_fragment(cache, n, t, nt);
  const double m2f = expected_left_fragment_second(cache, n, t, nt);
  LMoments out;
  out.mean = scale * m1;
  out.second = scale * (m2f + m1);
  return out;
}

SecondMomentDecomposition second_moment_left_exact(const GfCache& cache, int n, double t) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("second_moment_left_exact: floor(n t) must be >= 1");
  check_args(cache, n, t, 0);
  const std::size_t a = static_cast<std::size_t>(n - nt);
  const auto& law = cache.law();

  // One pass over i keeps the fragment mean by multiplicative update and
  // the fragment factorial second moment through the running-product sum.
  Kahan mean_terms;       // sum E(V-1) E Z^{l,i-1}
  Kahan diag_sq;          // sum (E(V-1) E Z^{l,i-1})^2
  Kahan i2_terms;         // sum E(V-1)^2 (E Z^{l,i-1})^2
  Kahan i3_terms;         // sum E(V-1) [E Z^2 - (E Z)^2]
  double running = 1.0;   // R(m) = prod f'(q_j), j in [a, m)
  Kahan kersting;         // sum f''(q_r) R(r) / f'(q_r)
  for (int i = 1; i <= nt; ++i) {
    const std::size_t m = a + static_cast<std::size_t>(i) - 1;
    const double frag_mean = cache.q(a) / cache.q(m) * running;          // E Z^{l,i-1}
    const double frag_second_f =
        cache.q(a) * cache.q(a) / cache.q(m) * running * kersting.value();
    const double frag_second = frag_second_f + frag_mean;                // E (Z^{l,i-1})^2
    const double ev1 = cache.mean_v_minus_1(m);
    const double term = ev1 * frag_mean;
    mean_terms.add(term);
    diag_sq.add(term * term);
    i2_terms.add(cache.mean_v_minus_1_sq(m) * frag_mean * frag_mean);
    i3_terms.add(ev1 * (frag_second - frag_mean * frag_mean));
    const double fp = law.gf_prime(cache.q(m));
    kersting.add(law.gf_second(cache.q(m)) * running / fp);
    running *= fp;
  }
  SecondMomentDecomposition out;
  const double s = mean_terms.value();
  out.i1 = s * s - diag_sq.value();
  out.i2 = i2_terms.value();
  out.i3 = i3_terms.value();
  // E(part)^2 = E(part - 1)^2 + 2 E(part - 1) + 1 with E(part - 1) = s.
  out.second_moment = out.i1 + out.i2 + out.i3 + 2.0 * s + 1.0;
  return out;
}

double second_moment_right_exact(const GfCache& cache, int n, double t) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("second_moment_right_exact: floor(n t) must be >= 1");
  if (cache.horizon() < static_cast<std::size_t>(n))
    throw std::domain_error("second_moment_right_exact: cache horizon below n");
  const std::size_t a = static_cast<std::size_t>(n - nt);
  const double sigma2 = cache.law().sigma2();
  Kahan mean_terms, diag_sq, second_terms;
  for (int i = 1; i <= nt; ++i) {
    const std::size_t m = a + static_cast<std::size_t>(i) - 1;
    const double ex = cache.mean_x(m);
    mean_terms.add(ex);
    diag_sq.add(ex * ex);
    // E (sum_{j<=X} Z_{i-1;j})^2 = E X sigma^2 (i-1) + E X^2, since the
    // ordinary subtree has mean 1 and variance sigma^2 (i-1).
    second_terms.add(ex * sigma2 * static_cast<double>(i - 1) + cache.mean_x_sq(m));
  }
  const double s = mean_terms.value();
  const double cross = s * s - diag_sq.value();
  return cross + second_terms.value() + 2.0 * s + 1.0;
}

std::vector<double> increase_probs_exact(const GfCache& cache, int n, double t, Side side) {
  const int nt = scaled_generation(n, t);
  if (cache.horizon() < static_cast<std::size_t>(n))
    throw std::domain_error("increase_probs_exact: cache horizon below n");
  const std::size_t gap = static_cast<std::size_t>(n - nt);
  const auto pmf = cache.law().pmf_table();
  std::vector<double> probs(nt);
  for (int i = 1; i <= nt; ++i) {
    const std::size_t m = gap + static_cast<std::size_t>(i) - 1;
    const double q = cache.q(m);
    const double c = cache.c(m);
    double none;  // E[(subtree-dies)^sibling-count] at this step
    if (side == Side::Left) {
      // a = P(one conditioned subtree dies by nt) = q_{i-1} / q_{i-1+gap};
      // E a^{V-1} = c sum_k p_k sum_{j<k} (a q)^j. At i = 1 the siblings sit
      // at generation nt themselves, so a = q_0 / q_gap = 0.
      const double a = cache.q(i - 1) / cache.q(i - 1 + gap);
      const double aq = a * q;
      double acc = 0.0, s = 0.0;
      for (std::size_t k = 1; k < pmf.size(); ++k) {
        s = 1.0 + aq * s;
        acc += pmf[k] * s;
      }
      none = c * acc;
    } else {
      // a = P(one ordinary subtree dies by nt) = q_{i-1};
      // E a^X = c sum_k p_k T_k with T_{k+1} = a T_k + q^k.
      const double a = cache.q(i - 1);
      double acc = 0.0, tk = 0.0, qpow = 1.0;
      for (std::size_t k = 1; k < pmf.size(); ++k) {
        tk = a * tk + qpow;  // T_k
        qpow *= q;
        acc += pmf[k] * tk;
      }
      none = c * acc;
    }
    probs[i - 1] = std::max(0.0, 1.0 - none);
  }
  return probs;
}

std::vector<double> split_time_cdf_exact(const GfCache& cache, int n, double t, Side side,
                                         int k) {
  if (k < 1) throw std::domain_error("split_time_cdf_exact: k must be >= 1");
  const int nt = scaled_generation(n, t);
  const auto probs = increase_probs_exact(cache, n, t, side);
  // Walk m downward from nt, folding in the Bernoulli increase at step
  // m+1; weights[j] = P(exactly j increases at steps > m), j < k.
  std::vector<double> cdf(nt + 1, 0.0);
  std::vector<double> weights(k, 0.0);  // weights[j] = P(j increases at steps > m)
  weights[0] = 1.0;
  cdf[nt] = 1.0;
  for (int m = nt - 1; m >= 0; --m) {
    const double p = probs[m];  // increase at step m+1
    double carry = 0.0;         // mass arriving from j-1
    for (int j = 0; j < k; ++j) {
      const double up = weights[j] * p;
      weights[j] = weights[j] * (1.0 - p) + carry;
      carry = up;
    }
    double sum = 0.0;
    for (double w : weights) sum += w;
    cdf[m] = sum;
  }
  return cdf;
}

MomentReport moment_report(const GfCache& cache, int n, double t) {
  MomentReport rep;
  rep.n = n;
  rep.t = t;
  rep.nt = scaled_generation(n, t);
  rep.sigma2 = cache.law().sigma2();
  rep.a_nt = expected_left_count(cache, n, t);
  rep.c_nt = expected_right_count(cache, n, t);
  const LMoments lm = l_moments_exact(cache, n, t);
  rep.b_nt = lm.mean;
  rep.second_l = lm.second;
  rep.d_n = 1.0 / cache.surv(static_cast<std::size_t>(n));
  const auto sm = second_moment_left_exact(cache, n, t);
  rep.i_n1 = sm.i1;
  rep.i_n2 = sm.i2;
  rep.i_n3 = sm.i3;
  rep.second_left = sm.second_moment;
  rep.second_right = second_moment_right_exact(cache, n, t);

  const double nn = static_cast<double>(n);
  rep.target_a = limits::l_limit_mean(t, rep.sigma2);
  rep.target_b = rep.target_a;
  rep.target_c = t * rep.sigma2 / 2.0;
  rep.target_second_left = limits::l_limit_second_moment(t, rep.sigma2);
  rep.target_second_l = rep.target_second_left;
  rep.target_second_right = (t * rep.sigma2) * (t * rep.sigma2) / 2.0;
  rep.rel_err_a = std::abs(rep.a_nt / nn - rep.target_a) / rep.target_a;
  rep.rel_err_b = std::abs(rep.b_nt / nn - rep.target_b) / rep.target_b;
  rep.rel_err_c = std::abs(rep.c_nt / nn - rep.target_c) / rep.target_c;
  rep.rel_err_second_left =
      std::abs(rep.second_left / (nn * nn) - rep.target_second_left) / rep.target_second_left;
  rep.rel_err_second_right =
      std::abs(rep.second_right / (nn * nn) - rep.target_second_right) / rep.target_second_right;
  rep.rel_err_second_l =
      std::abs(rep.second_l / (nn * nn) - rep.target_second_l) / rep.target_second_l;
  return rep;
}

}  // namespace moments
}  // namespace geigertree
