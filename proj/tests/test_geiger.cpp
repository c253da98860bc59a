#include <cmath>
#include <map>

#include <stdexcept>

#include "doctest.h"

#include "geigertree/geiger.hpp"
#include "geigertree/moments.hpp"
#include "geigertree/reduce.hpp"
#include "geigertree/stats.hpp"

using namespace geigertree;

namespace {

// Per-particle decomposition sampler: every subtree particle draws its
// offspring individually and every generation is walked to the end. An
// independent route used to pin the aggregate-sum laws and the early
// extinction pruning.
DecompositionTrace simulate_decomposition_per_particle(const GfCache& cache, int n, double t,
                                                       Rng& rng) {
  const int nt = scaled_generation(n, t);
  DecompositionTrace trace;
  trace.n = n;
  trace.nt = nt;
  trace.left_running.assign(nt + 1, 0);
  trace.right_running.assign(nt + 1, 0);
  trace.left_survivors.assign(nt + 1, 0);
  trace.right_survivors.assign(nt + 1, 0);
  trace.left_running[0] = trace.right_running[0] = 1;
  const int gap = n - nt;
  for (int i = 1; i <= nt; ++i) {
    const auto step = sample_spine_step(cache, gap + i - 1, rng);
    std::int64_t inc = 0;
    std::int32_t surv = 0;
    for (std::int64_t j = 1; j < step.v; ++j) {
      std::int64_t z = 1;
      for (int d = 0; d < i - 1; ++d) {
        const TiltedLaw tilted(cache, static_cast<std::size_t>(i - 1 + gap - d - 1));
        std::int64_t next = 0;
        for (std::int64_t p = 0; p < z; ++p) next += tilted.sample(rng);
        z = next;
      }
      if (z > 0) {
        inc += z;
        ++surv;
      }
    }
    trace.left_running[i] = trace.left_running[i - 1] + inc;
    trace.left_survivors[i] = surv;
    inc = 0;
    surv = 0;
    for (std::int64_t j = 0; j < step.x(); ++j) {
      std::int64_t z = 1;
      for (int d = 0; d < i - 1; ++d) {
        std::int64_t next = 0;
        for (std::int64_t p = 0; p < z; ++p) next += cache.law().sample(rng);
        z = next;
      }
      if (z > 0) {
        inc += z;
        ++surv;
      }
    }
    trace.right_running[i] = trace.right_running[i - 1] + inc;
    trace.right_survivors[i] = surv;
  }
  return trace;
}

double tv(const std::map<std::int64_t, double>& a, const std::map<std::int64_t, double>& b) {
  return stats::tv_distance(a, b);
}

}  // namespace

TEST_SUITE("geiger") {

TEST_CASE("subtree evolution basics") {
  const GfCache bin(OffspringLaw::binary(), 16);
  Rng rng(5);
  CHECK(simulate_subtree_counts(bin, 3, 3, rng).final_count == 1);
  CHECK_THROWS_AS(simulate_subtree_counts(bin, 4, 3, rng), std::domain_error);

  double total = 0.0;
  const int runs = 1'000'000;
  for (int i = 0; i < runs; ++i) total += simulate_subtree_counts(bin, 0, 1, rng).final_count;
  CHECK(std::abs(total / runs - 1.0) < 0.003);

  // a line conditioned to die within one generation dies immediately
  for (int i = 0; i < 1000; ++i) {
    const auto run = simulate_subtree_counts_tilted(bin, 0, 1, 1, rng);
    CHECK(run.final_count == 0);
    CHECK(run.extinct_at == 1);
  }
  // and a line conditioned to die within h generations is dead at h
  for (int i = 0; i < 2000; ++i)
    CHECK(simulate_subtree_counts_tilted(bin, 0, 5, 5, rng).final_count == 0);
  CHECK_THROWS_AS(simulate_subtree_counts_tilted(bin, 0, 6, 5, rng), std::domain_error);
}

TEST_CASE("n = 2 enumeration pins the spine-step horizon indexing") {
  Rng rng(17);
  const GfCache bin(OffspringLaw::binary(), 2);
  for (int i = 0; i < 100'000; ++i) {
    const auto trace = simulate_geiger_decomposition(bin, 2, 0.5, rng);
    CHECK(trace.z_total() == 2);
  }

  // exact law of (z_left, z_right) at n = 2 for the geometric law:
  // P(a, b) = c_1 p_{a+b-1} q_1^{a-1} = 3 * 2^-(2a+b)
  const GfCache geo(OffspringLaw::geometric(), 2);
  std::map<std::int64_t, double> emp, exact;
  const int reps = 400'000;
  for (int i = 0; i < reps; ++i) {
    const auto trace = simulate_geiger_decomposition(geo, 2, 0.5, rng);
    emp[trace.z_left() * 1000 + trace.z_right()] += 1.0 / reps;
  }
  for (std::int64_t a = 1; a < 40; ++a)
    for (std::int64_t b = 1; b < 40; ++b) {
      const double p = 3.0 * std::pow(2.0, -static_cast<double>(2 * a + b));
      if (p > 1e-10) exact[a * 1000 + b] = p;
    }
  CHECK(tv(emp, exact) < 0.01);

  // marginal of the total matches p_k (1 - q_1^k) / (1 - q_2): k = 1 term 3/8
  std::int64_t ones = 0;
  for (int i = 0; i < reps; ++i)
    if (simulate_geiger_decomposition(geo, 2, 0.5, rng).z_total() == 1) ++ones;
  CHECK(std::abs(static_cast<double>(ones) / reps - 3.0 / 8.0) < 0.0035);
}

TEST_CASE("trace structure invariants") {
  Rng rng(23);
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, 30);
    for (int rep = 0; rep < 2000; ++rep) {
      const auto trace = simulate_geiger_decomposition(cache, 30, 0.5, rng);
      CHECK(trace.z_left() >= 1);
      CHECK(trace.z_right() >= 1);
      CHECK(trace.left_running[0] == 1);
      CHECK(trace.right_running[0] == 1);
      for (int i = 1; i <= trace.nt; ++i) {
        CHECK(trace.left_running[i] >= trace.left_running[i - 1]);
        CHECK(trace.right_running[i] >= trace.right_running[i - 1]);
        CHECK((trace.left_running[i] > trace.left_running[i - 1]) ==
              (trace.left_survivors[i] > 0));
        CHECK((trace.right_running[i] > trace.right_running[i - 1]) ==
              (trace.right_survivors[i] > 0));
      }
    }
  }
  CHECK_THROWS_AS(simulate_geiger_decomposition(GfCache(OffspringLaw::binary(), 2), 2, 0.2,
                                                rng),
                  std::domain_error);
}

TEST_CASE("total count matches the exact conditional law") {
  Rng rng(31);
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    for (int n : {4, 6}) {
      const GfCache cache(law, n);
      std::map<std::int64_t, double> emp;
      const int reps = 200'000;
      for (int i = 0; i < reps; ++i)
        emp[simulate_geiger_decomposition(cache, n, 0.5, rng).z_total()] += 1.0 / reps;
      const auto exact = moments::exact_conditional_law(cache, n, 0.5, 1 << 16);
      CHECK(tv(emp, exact.pmf) < 0.01);
    }
  }
}

TEST_CASE("split times and survivor counts match the generating-function laws") {
  Rng rng(37);
  const int n = 24;
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, n);
    const int nt = scaled_generation(n, 0.5);
    const int reps = 100'000;
    std::map<std::int64_t, double> emp_l1, emp_l2, emp_r1, emp_r2;
    for (int i = 0; i < reps; ++i) {
      const auto trace = simulate_geiger_decomposition(cache, n, 0.5, rng);
      const auto gl = split_times(trace, Side::Left, 2);
      const auto gr = split_times(trace, Side::Right, 2);
      emp_l1[gl[0]] += 1.0 / reps;
      emp_l2[gl[1]] += 1.0 / reps;
      emp_r1[gr[0]] += 1.0 / reps;
      emp_r2[gr[1]] += 1.0 / reps;
    }
    auto exact_law = [&](Side side, int k) {
      const auto cdf = moments::split_time_cdf_exact(cache, n, 0.5, side, k);
      std::map<std::int64_t, double> law_map;
      for (int m = 0; m <= nt; ++m) law_map[m] = cdf[m] - (m > 0 ? cdf[m - 1] : 0.0);
      return law_map;
    };
    CHECK(tv(emp_l1, exact_law(Side::Left, 1)) < 0.012);
    CHECK(tv(emp_l2, exact_law(Side::Left, 2)) < 0.012);
    CHECK(tv(emp_r1, exact_law(Side::Right, 1)) < 0.012);
    CHECK(tv(emp_r2, exact_law(Side::Right, 2)) < 0.012);
  }
}

TEST_CASE("rejection reference sampler") {
  Rng rng(41);
  const auto bin = OffspringLaw::binary();
  const auto tree0 = sample_conditioned_tree_rejection(bin, 0, rng);
  CHECK(tree0.size() == 1);

  auto rate = [&](const OffspringLaw& law, int n) {
    std::int64_t attempts = 0, accepted = 0;
    while (accepted < 30'000) {
      ++attempts;
      if (sample_gw_tree(law, n, rng).count_at_generation(n) > 0) ++accepted;
    }
    return static_cast<double>(accepted) / static_cast<double>(attempts);
  };
  CHECK(std::abs(rate(bin, 2) - 3.0 / 8.0) < 0.01);
  CHECK(std::abs(rate(OffspringLaw::geometric(), 3) - 0.25) < 0.01);

  CHECK_THROWS_WITH_AS(sample_conditioned_tree_rejection(bin, 4, rng, 0),
                       doctest::Contains("attempts"), std::runtime_error);
}

TEST_CASE("reference decomposition on constructed trees") {
  // chain: 0 -> 1 -> 2 -> 3 -> 4
  GwTree chain;
  chain.depth = 4;
  for (int v = 0; v <= 4; ++v) {
    chain.children.emplace_back();
    chain.generation.push_back(v);
    if (v > 0) chain.children[v - 1].push_back(v);
  }
  const auto ref = decompose_reference_tree(chain, 4, 0.5);
  CHECK(ref.z_left == 1);
  CHECK(ref.z_right == 1);
  CHECK(ref.trace.z_total() == 1);

  // root with two children, both with one grandchild each: the spine is the
  // left child, the right child counts on the right side at nt = 1.
  GwTree two;
  two.depth = 2;
  two.children.assign(5, {});
  two.generation = {0, 1, 1, 2, 2};
  two.children[0] = {1, 2};
  two.children[1] = {3};
  two.children[2] = {4};
  const auto ref2 = decompose_reference_tree(two, 2, 0.5);
  CHECK(ref2.z_left == 1);
  CHECK(ref2.z_right == 2);

  // extinct-by-n trees are rejected
  GwTree dead;
  dead.depth = 2;
  dead.children.assign(2, {});
  dead.generation = {0, 1};
  dead.children[0] = {1};
  CHECK_THROWS_AS(decompose_reference_tree(dead, 2, 0.5), std::domain_error);

  // partition identity on random surviving trees
  Rng rng(43);
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    for (int rep = 0; rep < 3000; ++rep) {
      const auto tree = sample_conditioned_tree_rejection(law, 6, rng);
      const auto r = decompose_reference_tree(tree, 6, 0.5);
      CHECK(r.z_left + r.z_right - 1 == tree.count_at_generation(3));
    }
  }
}

TEST_CASE("spine sampler agrees with the rejection oracle on reduced statistics") {
  Rng rng(47);
  const int n = 6, reps = 150'000;
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, n);
    std::map<std::int64_t, double> spine_l, spine_r, ref_l, ref_r;
    for (int i = 0; i < reps; ++i) {
      const auto trace = simulate_geiger_decomposition(cache, n, 0.5, rng);
      const auto rec = compute_reduced_record(trace, 2);
      spine_l[rec.g_left[0] * 10000 + rec.d_left[0] * 100 + std::min<std::int64_t>(rec.z_left, 90)] +=
          1.0 / reps;
      spine_r[rec.g_right[0] * 10000 + rec.d_right[0] * 100 +
              std::min<std::int64_t>(rec.z_right, 90)] += 1.0 / reps;
    }
    for (int i = 0; i < reps; ++i) {
      const auto tree = sample_conditioned_tree_rejection(law, n, rng);
      const auto rec = compute_reduced_record(decompose_reference_tree(tree, n, 0.5).trace, 2);
      ref_l[rec.g_left[0] * 10000 + rec.d_left[0] * 100 + std::min<std::int64_t>(rec.z_left, 90)] +=
          1.0 / reps;
      ref_r[rec.g_right[0] * 10000 + rec.d_right[0] * 100 +
            std::min<std::int64_t>(rec.z_right, 90)] += 1.0 / reps;
    }
    CHECK(tv(spine_l, ref_l) < 0.015);
    CHECK(tv(spine_r, ref_r) < 0.015);
  }
}

TEST_CASE("aggregate-sum fast paths match per-particle simulation in law") {
  Rng rng(53);
  const int n = 6, reps = 120'000;
  for (const auto& law : {OffspringLaw::binary(), OffspringLaw::geometric()}) {
    const GfCache cache(law, n);
    std::map<std::int64_t, double> fast, slow;
    for (int i = 0; i < reps; ++i)
      fast[simulate_geiger_decomposition(cache, n, 0.5, rng).z_total()] += 1.0 / reps;
    for (int i = 0; i < reps; ++i)
      slow[simulate_decomposition_per_particle(cache, n, 0.5, rng).z_total()] += 1.0 / reps;
    CHECK(tv(fast, slow) < 0.01);
  }
}

TEST_CASE("decomposition replicates are reproducible") {
  const GfCache cache(OffspringLaw::geometric(), 40);
  Rng a = make_replicate_rng(7, 3), b = make_replicate_rng(7, 3);
  const auto ta = simulate_geiger_decomposition(cache, 40, 0.5, a);
  const auto tb = simulate_geiger_decomposition(cache, 40, 0.5, b);
  CHECK(ta.left_running == tb.left_running);
  CHECK(ta.right_running == tb.right_running);
  CHECK(ta.left_survivors == tb.left_survivors);
  CHECK(ta.right_survivors == tb.right_survivors);
}

}  // TEST_SUITE
