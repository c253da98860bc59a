#include <cmath>
#include <vector>

#include <stdexcept>

#include "doctest.h"

#include "geigertree/geiger.hpp"
#include "geigertree/moments.hpp"

using namespace geigertree;

namespace {

// Direct pmf of the conditioned fragment at index i (one particle evolved
// i steps under the depth-indexed tilted laws), by explicit convolution.
// Independent of the product/Kersting formulas it checks.
std::vector<double> fragment_pmf_oracle(const GfCache& cache, int n, double t, int i) {
  const int nt = scaled_generation(n, t);
  const int gap = n - nt;
  std::vector<double> cur{0.0, 1.0};
  for (int k = 1; k <= i; ++k) {
    const TiltedLaw tilted(cache, static_cast<std::size_t>(i + gap - k));
    std::vector<double> tp;
    for (std::size_t j = 0; j < cache.law().support_limit(); ++j) tp.push_back(tilted.pmf(j));
    std::vector<double> next(1, 0.0);
    std::vector<double> conv{1.0};
    for (std::size_t z = 0; z < cur.size(); ++z) {
      if (cur[z] > 0.0) {
        if (next.size() < conv.size()) next.resize(conv.size(), 0.0);
        for (std::size_t a = 0; a < conv.size(); ++a) next[a] += cur[z] * conv[a];
      }
      if (z + 1 < cur.size()) {
        std::vector<double> grown(conv.size() + tp.size() - 1, 0.0);
        for (std::size_t a = 0; a < conv.size(); ++a) {
          if (conv[a] == 0.0) continue;
          for (std::size_t b = 0; b < tp.size(); ++b) grown[a + b] += conv[a] * tp[b];
        }
        double tail = 0.0;
        std::size_t keep = grown.size();
        while (keep > 1 && tail + grown[keep - 1] < 1e-15) tail += grown[--keep];
        grown.resize(keep);
        conv = std::move(grown);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

TEST_SUITE("moments") {

TEST_CASE("fragment moments match the convolution oracle at small n") {
  const int n = 8;
  const double t = 0.5;
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, n);
    for (int i = 0; i <= scaled_generation(n, t); ++i) {
      const auto pmf = fragment_pmf_oracle(cache, n, t, i);
      double mean = 0.0, fact2 = 0.0;
      for (std::size_t j = 0; j < pmf.size(); ++j) {
        mean += j * pmf[j];
        fact2 += static_cast<double>(j) * static_cast<double>(j - 1) * pmf[j];
      }
      CHECK(moments::expected_left_fragment(cache, n, t, i) ==
            doctest::Approx(mean).epsilon(1e-10));
      CHECK(moments::expected_left_fragment_second(cache, n, t, i) ==
            doctest::Approx(fact2).epsilon(1e-10));
    }
  }
}

TEST_CASE("fragment mean endpoints and asymptotic profile") {
  const int n = 100'000;
  const double t = 0.5;
  const GfCache cache(OffspringLaw::geometric(), n);
  const int nt = scaled_generation(n, t);
  CHECK(moments::expected_left_fragment(cache, n, t, 0) == 1.0);
  CHECK(moments::expected_left_fragment_second(cache, n, t, 0) == 0.0);

  const double at_nt = moments::expected_left_fragment(cache, n, t, nt);
  CHECK(std::abs(at_nt - 0.25) / 0.25 < 0.02);

  const int mid = nt / 2;
  const double asym =
      std::pow(n * (1 - t) / (mid + n * (1 - t)), 2.0);
  CHECK(std::abs(moments::expected_left_fragment(cache, n, t, mid) / asym - 1.0) < 0.02);

  const double second = moments::expected_left_fragment_second(cache, n, t, nt);
  const double second_asym = nt * std::pow(1.0 - t, 3.0) * 2.0;
  CHECK(std::abs(second / second_asym - 1.0) < 0.03);

  // the factorial second moment grows over the early range (it peaks near
  // n(1-t)/2 and falls back thereafter)
  const GfCache small(OffspringLaw::geometric(), 100);
  double prev = -1.0;
  for (int i = 0; i <= 20; ++i) {
    const double v = moments::expected_left_fragment_second(small, 100, t, i);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("expected decomposition counts") {
  const double t = 0.5;
  // single-step horizon: exact identities
  const GfCache tiny(OffspringLaw::geometric(), 2);
  CHECK(moments::expected_left_count(tiny, 2, t) ==
        doctest::Approx(1.0 + tiny.mean_v_minus_1(1)).epsilon(1e-14));
  CHECK(moments::expected_right_count(tiny, 2, t) ==
        doctest::Approx(1.0 + tiny.mean_x(1)).epsilon(1e-14));

  // convergence of the scaled means and error decay in n
  double prev_err_a = 1.0, prev_err_c = 1.0;
  for (int n : {1000, 10'000}) {
    const GfCache cache(OffspringLaw::geometric(), n);
    const double err_a = std::abs(moments::expected_left_count(cache, n, t) / n - 0.25) / 0.25;
    const double err_c = std::abs(moments::expected_right_count(cache, n, t) / n - 0.5) / 0.5;
    CHECK(err_a < prev_err_a);
    CHECK(err_c < prev_err_c);
    prev_err_a = err_a;
    prev_err_c = err_c;
  }
  CHECK(prev_err_a < 0.01);
  CHECK(prev_err_c < 0.01);
}

TEST_CASE("exact conditional law") {
  const double t = 0.5;
  const GfCache bin(OffspringLaw::binary(), 2);
  const auto blaw = moments::exact_conditional_law(bin, 2, t, 32);
  CHECK(blaw.pmf.at(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(blaw.pmf.size() == 1);

  const GfCache geo(OffspringLaw::geometric(), 2);
  const auto glaw = moments::exact_conditional_law(geo, 2, t, 64);
  CHECK(glaw.pmf.at(1) == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
  CHECK(glaw.pmf.at(2) == doctest::Approx(9.0 / 32.0).epsilon(1e-12));
  CHECK(glaw.pmf.at(3) == doctest::Approx(21.0 / 128.0).epsilon(1e-12));

  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, 6);
    const auto cond = moments::exact_conditional_law(cache, 6, t, 1 << 16);
    double total = 0.0;
    for (const auto& [j, p] : cond.pmf) {
      CHECK(j >= 1);
      total += p;
    }
    CHECK(std::abs(total + cond.tail - 1.0) < 1e-9);
  }

  CHECK_THROWS_WITH_AS(moments::exact_conditional_law(geo, 2, t, 1),
                       doctest::Contains("j_max"), std::domain_error);
}

TEST_CASE("conditioned-line moments and the mean ratio") {
  const double t = 0.5;
  const int n = 100'000;
  const GfCache cache(OffspringLaw::geometric(), n);
  const auto lm = moments::l_moments_exact(cache, n, t);
  CHECK(std::abs(lm.mean / n - 0.25) / 0.25 < 0.01);
  CHECK(std::abs(lm.second / (static_cast<double>(n) * n) - 0.125) / 0.125 < 0.03);
  CHECK(std::abs(moments::expected_left_count(cache, n, t) / lm.mean - 1.0) < 0.02);
}

TEST_CASE("second-moment decomposition and report") {
  const double t = 0.5;
  const int n = 10'000;
  const GfCache cache(OffspringLaw::geometric(), n);
  const auto rep = moments::moment_report(cache, n, t);
  CHECK(rep.rel_err_second_left < 0.03);
  CHECK(rep.rel_err_second_right < 0.03);
  CHECK(rep.rel_err_second_l < 0.03);
  CHECK(rep.i_n2 / (static_cast<double>(n) * n) < 1e-2);
  CHECK(rep.d_n * cache.surv(n) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rep.second_left == doctest::Approx(rep.i_n1 + rep.i_n2 + rep.i_n3 +
                                           2.0 * (rep.a_nt - 1.0) + 1.0)
                               .epsilon(1e-12));

  // the exact second moment matches the oracle-backed fragment route at small n
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache small(law, 8);
    const auto sm = moments::second_moment_left_exact(small, 8, t);
    CHECK(sm.second_moment > 1.0);
    CHECK(sm.i1 >= 0.0);
    CHECK(sm.i2 >= 0.0);
    CHECK(sm.i3 >= 0.0);
  }
}

TEST_CASE("exact increase probabilities and split-time laws") {
  const double t = 0.5;
  const int n = 6;
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, n);
    const int nt = scaled_generation(n, t);
    const int gap = n - nt;

    const auto left = moments::increase_probs_exact(cache, n, t, Side::Left);
    const auto right = moments::increase_probs_exact(cache, n, t, Side::Right);
    REQUIRE(static_cast<int>(left.size()) == nt);

    // step 1, right side: increase iff X >= 1, i.e. 1 - P(V = W)
    double p_vw = 0.0;
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(law.support_limit()); ++k)
      p_vw += spine_step_pmf(cache, gap, k, k);
    CHECK(right[0] == doctest::Approx(1.0 - p_vw).epsilon(1e-12));

    // step 1, left side: increase iff V >= 2
    double p_v1 = 0.0;
    for (std::int64_t k = 1; k < static_cast<std::int64_t>(law.support_limit()); ++k)
      p_v1 += spine_step_pmf(cache, gap, 1, k);
    CHECK(left[0] == doctest::Approx(1.0 - p_v1).epsilon(1e-12));

    // k = 1 split CDF is the product of no-increase probabilities
    for (Side side : {Side::Left, Side::Right}) {
      const auto probs = moments::increase_probs_exact(cache, n, t, side);
      const auto cdf = moments::split_time_cdf_exact(cache, n, t, side, 1);
      for (int m = 0; m <= nt; ++m) {
        double prod = 1.0;
        for (int i = m + 1; i <= nt; ++i) prod *= 1.0 - probs[i - 1];
        CHECK(cdf[m] == doctest::Approx(prod).epsilon(1e-12));
      }
      // CDFs are nondecreasing in m and in k
      const auto cdf2 = moments::split_time_cdf_exact(cache, n, t, side, 2);
      for (int m = 0; m <= nt; ++m) {
        CHECK(cdf2[m] >= cdf[m]);
        if (m > 0) CHECK(cdf[m] >= cdf[m - 1]);
      }
      CHECK(cdf[nt] == 1.0);
    }
  }
}

}  // TEST_SUITE
