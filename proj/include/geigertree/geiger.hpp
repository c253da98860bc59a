#pragma once

#include <cstdint>
#include <vector>

#include "geigertree/offspring.hpp"
#include "geigertree/rng.hpp"

namespace geigertree {

enum class Side { Left, Right };

// Per-replicate record of one spine decomposition run to generation
// nt = floor(n t). running[i] is the generation-nt particle count
// accumulated through decomposition step i (running[0] = 1, the spine
// particle); survivors[i] is the number of step-i siblings on that side
// whose subtree still has particles at generation nt.
struct DecompositionTrace {
  int n = 0;
  int nt = 0;
  std::vector<std::int64_t> left_running, right_running;
  std::vector<std::int32_t> left_survivors, right_survivors;

  const std::vector<std::int64_t>& running(Side s) const {
    return s == Side::Left ? left_running : right_running;
  }
  const std::vector<std::int32_t>& survivors(Side s) const {
    return s == Side::Left ? left_survivors : right_survivors;
  }
  std::int64_t z_left() const { return left_running[nt]; }
  std::int64_t z_right() const { return right_running[nt]; }
  std::int64_t z_total() const { return z_left() + z_right() - 1; }
};

struct SubtreeRun {
  std::int64_t final_count = 0;
  int extinct_at = -1;  // first relative generation with count 0, -1 if alive throughout
  bool alive_at(int g) const { return extinct_at < 0 || g < extinct_at; }
};

// Ordinary subtree: evolve one particle from start_gen to end_gen,
// one aggregate draw per generation, stopping at extinction.
SubtreeRun simulate_subtree_counts(const GfCache& cache, int start_gen, int end_gen, Rng& rng);

// Extinction-conditioned subtree: the root must have no descendants
// extinction_horizon generations after start_gen. Population at relative
// generation d reproduces under the tilted law with depth
// extinction_horizon - d - 1.
SubtreeRun simulate_subtree_counts_tilted(const GfCache& cache, int start_gen, int end_gen,
                                          int extinction_horizon, Rng& rng);

// One replicate of the conditioned-tree decomposition at generation
// floor(n t). Step i = 1..nt draws the spine sibship (V, W) at horizon
// index n - nt + i - 1, evolves the V-1 left siblings as
// extinction-conditioned subtrees (horizon i - 1 + n - nt) and the W-V
// right siblings as ordinary subtrees, all forward to generation nt.
// Left siblings are consumed from the stream before right siblings.
DecompositionTrace simulate_geiger_decomposition(const GfCache& cache, int n, double t, Rng& rng);

// floor(n t) with the guard rails used across the library.
int scaled_generation(int n, double t);

// Ordered rooted tree grown breadth-first to a fixed depth; children
// keep their birth order. Node 0 is the root.
struct GwTree {
  std::vector<std::vector<std::uint32_t>> children;
  std::vector<std::int32_t> generation;
  int depth = 0;

  std::size_t size() const { return children.size(); }
  std::int64_t count_at_generation(int g) const;
};

GwTree sample_gw_tree(const OffspringLaw& law, int depth, Rng& rng);

struct RejectionError {
  std::int64_t attempts;
};

// Reference sampler: grow plain trees until one survives to generation n.
// Throws std::runtime_error carrying the attempt count when the cap is hit.
GwTree sample_conditioned_tree_rejection(const OffspringLaw& law, int n, Rng& rng,
                                         std::int64_t max_attempts = 10'000'000);

struct ReferenceDecomposition {
  std::int64_t z_left = 1;
  std::int64_t z_right = 1;
  DecompositionTrace trace;
};

// Walk the survivor spine (left-most child with descendants at generation
// n, recursively) down to generation floor(n t) and classify generation-nt
// particles by the side of the spine they branched from. The spine
// particle itself is counted in both parts.
ReferenceDecomposition decompose_reference_tree(const GwTree& tree, int n, double t);

}  // namespace geigertree
