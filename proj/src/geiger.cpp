#include "geigertree/geiger.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace geigertree {

int scaled_generation(int n, double t) {
  if (n < 1) throw std::domain_error("scaled_generation: n must be >= 1");
  if (!(t > 0.0 && t < 1.0)) throw std::domain_error("scaled_generation: t must lie in (0, 1)");
  return static_cast<int>(std::floor(static_cast<double>(n) * t));
}

SubtreeRun simulate_subtree_counts(const GfCache& cache, int start_gen, int end_gen, Rng& rng) {
  if (start_gen > end_gen)
    throw std::domain_error("simulate_subtree_counts: start_gen must be <= end_gen");
  SubtreeRun run;
  run.final_count = 1;
  const auto& law = cache.law();
  for (int g = 0; g < end_gen - start_gen; ++g) {
    run.final_count = aggregate_offspring_sum(law, run.final_count, rng);
    if (run.final_count == 0) {
      run.extinct_at = g + 1;
      break;
    }
  }
  return run;
}

SubtreeRun simulate_subtree_counts_tilted(const GfCache& cache, int start_gen, int end_gen,
                                          int extinction_horizon, Rng& rng) {
  if (start_gen > end_gen)
    throw std::domain_error("simulate_subtree_counts_tilted: start_gen must be <= end_gen");
  const int gens = end_gen - start_gen;
  if (gens > extinction_horizon)
    throw std::domain_error(
        "simulate_subtree_counts_tilted: cannot observe past the extinction horizon");
  SubtreeRun run;
  run.final_count = 1;
  for (int d = 0; d < gens; ++d) {
    TiltedLaw tilted(cache, static_cast<std::size_t>(extinction_horizon - d - 1));
    run.final_count = aggregate_offspring_sum(tilted, run.final_count, rng);
    if (run.final_count == 0) {
      run.extinct_at = d + 1;
      break;
    }
  }
  return run;
}

DecompositionTrace simulate_geiger_decomposition(const GfCache& cache, int n, double t, Rng& rng) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("simulate_geiger_decomposition: floor(n t) must be >= 1");
  if (cache.horizon() < static_cast<std::size_t>(n))
    throw std::domain_error("simulate_geiger_decomposition: cache horizon below n");

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
    const SpineStep step = sample_spine_step(cache, static_cast<std::size_t>(gap + i - 1), rng);
    const int horizon = i - 1 + gap;

    std::int64_t inc = 0;
    std::int32_t surv = 0;
    for (std::int64_t j = 1; j < step.v; ++j) {
      std::int64_t z = 1;
      for (int d = 0; d < i - 1 && z > 0; ++d) {
        TiltedLaw tilted(cache, static_cast<std::size_t>(horizon - d - 1));
        z = aggregate_offspring_sum(tilted, z, rng);
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
    const auto& law = cache.law();
    for (std::int64_t j = 0; j < step.x(); ++j) {
      std::int64_t z = 1;
      for (int d = 0; d < i - 1 && z > 0; ++d) z = aggregate_offspring_sum(law, z, rng);
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

std::int64_t GwTree::count_at_generation(int g) const {
  std::int64_t count = 0;
  for (std::size_t v = 0; v < generation.size(); ++v)
    if (generation[v] == g) ++count;
  return count;
}

GwTree sample_gw_tree(const OffspringLaw& law, int depth, Rng& rng) {
  GwTree tree;
  tree.depth = depth;
  tree.children.emplace_back();
  tree.generation.push_back(0);
  std::vector<std::uint32_t> frontier{0};
  std::vector<std::uint32_t> next;
  for (int g = 0; g < depth && !frontier.empty(); ++g) {
    next.clear();
    for (std::uint32_t v : frontier) {
      const std::int64_t kids = law.sample(rng);
      for (std::int64_t c = 0; c < kids; ++c) {
        const auto id = static_cast<std::uint32_t>(tree.children.size());
        tree.children.emplace_back();
        tree.generation.push_back(g + 1);
        tree.children[v].push_back(id);
        next.push_back(id);
      }
    }
    frontier.swap(next);
  }
  return tree;
}

GwTree sample_conditioned_tree_rejection(const OffspringLaw& law, int n, Rng& rng,
                                         std::int64_t max_attempts) {
  for (std::int64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    GwTree tree = sample_gw_tree(law, n, rng);
    if (n == 0 || tree.count_at_generation(n) > 0) return tree;
  }
  throw std::runtime_error("rejection sampler: no survivor after " +
                           std::to_string(max_attempts) + " attempts");
}

namespace {

// descendants[v] = number of generation `target` particles in the subtree
// rooted at v (v itself counts when generation[v] == target).
std::vector<std::int64_t> descendants_at(const GwTree& tree, int target) {
  std::vector<std::int64_t> counts(tree.size(), 0);
  for (std::size_t v = tree.size(); v-- > 0;) {
    if (tree.generation[v] == target) {
      counts[v] = 1;
      continue;
    }
    if (tree.generation[v] > target) continue;
    std::int64_t acc = 0;
    for (std::uint32_t c : tree.children[v]) acc += counts[c];
    counts[v] = acc;
  }
  return counts;
}

}  // namespace

ReferenceDecomposition decompose_reference_tree(const GwTree& tree, int n, double t) {
  const int nt = scaled_generation(n, t);
  if (nt < 1) throw std::domain_error("decompose_reference_tree: floor(n t) must be >= 1");
  if (tree.depth < n) throw std::domain_error("decompose_reference_tree: tree shallower than n");

  const auto at_n = descendants_at(tree, n);
  const auto at_nt = descendants_at(tree, nt);
  if (at_n[0] == 0)
    throw std::domain_error("decompose_reference_tree: tree extinct before generation n");

  ReferenceDecomposition out;
  auto& trace = out.trace;
  trace.n = n;
  trace.nt = nt;
  trace.left_running.assign(nt + 1, 0);
  trace.right_running.assign(nt + 1, 0);
  trace.left_survivors.assign(nt + 1, 0);
  trace.right_survivors.assign(nt + 1, 0);

  // Walk the spine from the root: at generation g the decomposition step
  // index is i = nt - g, so increments found high in the tree land at the
  // top of the running sequences.
  std::vector<std::int64_t> left_inc(nt + 1, 0), right_inc(nt + 1, 0);
  std::uint32_t spine = 0;
  for (int g = 0; g < nt; ++g) {
    const int i = nt - g;
    std::uint32_t next_spine = 0;
    bool found = false;
    std::int64_t lcount = 0, rcount = 0;
    std::int32_t lsurv = 0, rsurv = 0;
    for (std::uint32_t child : tree.children[spine]) {
      if (!found && at_n[child] > 0) {
        found = true;
        next_spine = child;
        continue;
      }
      const std::int64_t z = at_nt[child];
      if (!found) {
        lcount += z;
        if (z > 0) ++lsurv;
      } else {
        rcount += z;
        if (z > 0) ++rsurv;
      }
    }
    left_inc[i] = lcount;
    right_inc[i] = rcount;
    trace.left_survivors[i] = lsurv;
    trace.right_survivors[i] = rsurv;
    spine = next_spine;
  }

  trace.left_running[0] = trace.right_running[0] = 1;
  for (int i = 1; i <= nt; ++i) {
    trace.left_running[i] = trace.left_running[i - 1] + left_inc[i];
    trace.right_running[i] = trace.right_running[i - 1] + right_inc[i];
  }
  out.z_left = trace.z_left();
  out.z_right = trace.z_right();
  return out;
}

}  // namespace geigertree
