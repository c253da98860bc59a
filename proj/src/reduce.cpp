#include "geigertree/reduce.hpp"

#include <algorithm>
#include <stdexcept>

namespace geigertree {

std::vector<std::int32_t> split_times(const DecompositionTrace& trace, Side side, int max_k) {
  if (max_k < 1) throw std::domain_error("split_times: max_k must be >= 1");
  const auto& running = trace.running(side);
  std::vector<std::int32_t> g(max_k, 0);
  int k = 0;
  for (std::int32_t i = trace.nt; i >= 1 && k < max_k; --i)
    if (running[i] > running[i - 1]) g[k++] = i;
  return g;
}

ReducedRecord compute_reduced_record(const DecompositionTrace& trace, int max_k) {
  ReducedRecord rec;
  rec.g_left = split_times(trace, Side::Left, max_k);
  rec.g_right = split_times(trace, Side::Right, max_k);
  rec.d_left.assign(max_k, 0);
  rec.d_right.assign(max_k, 0);
  for (int k = 0; k < max_k; ++k) {
    if (rec.g_left[k] > 0) rec.d_left[k] = trace.left_survivors[rec.g_left[k]];
    if (rec.g_right[k] > 0) rec.d_right[k] = trace.right_survivors[rec.g_right[k]];
  }
  rec.h_left_1 = rec.g_left[0] > 0 ? trace.left_running[rec.g_left[0] - 1] : 1;
  rec.h_right_1 = rec.g_right[0] > 0 ? trace.right_running[rec.g_right[0] - 1] : 1;
  rec.g_both = std::max(rec.g_left[0], rec.g_right[0]);
  rec.mrca = trace.nt - rec.g_both;
  rec.z_left = trace.z_left();
  rec.z_right = trace.z_right();
  return rec;
}

}  // namespace geigertree
