#pragma once

#include <cstdint>
#include <vector>

#include "geigertree/geiger.hpp"

namespace geigertree {

// Split statistics of one decomposition trace. g_side[k-1] is the k-th
// split time counted from the top: the k-th largest index at which the
// running count strictly increases, padded with zeros once the side runs
// out of splits. d_side[k-1] is the surviving-sibling count at that split
// (zero when the split time is zero). h_side_1 is the particle count
// carried below the last split (1 when there is none). g_both is the
// first index from which both running counts are already final, and
// mrca = nt - g_both is the generation of the most recent common ancestor
// of all generation-nt particles.
struct ReducedRecord {
  std::vector<std::int32_t> g_left, g_right;
  std::vector<std::int64_t> d_left, d_right;
  std::int64_t h_left_1 = 1, h_right_1 = 1;
  std::int32_t g_both = 0;
  std::int32_t mrca = 0;
  std::int64_t z_left = 1, z_right = 1;

  std::int64_t z_total() const { return z_left + z_right - 1; }
};

std::vector<std::int32_t> split_times(const DecompositionTrace& trace, Side side, int max_k);

ReducedRecord compute_reduced_record(const DecompositionTrace& trace, int max_k);

}  // namespace geigertree
