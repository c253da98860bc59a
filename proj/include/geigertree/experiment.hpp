#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "geigertree/offspring.hpp"
#include "geigertree/reduce.hpp"

namespace geigertree {

inline constexpr std::uint64_t kDefaultSeed = 20250810ULL;
inline constexpr int kMaxSplitDepth = 8;  // upper bound on max_k

std::string version_string();

struct ExperimentConfig {
  std::string law = "binary";
  std::vector<double> params;
  int n = 2000;
  double t = 0.5;
  std::int64_t replicates = 100'000;
  std::uint64_t seed = kDefaultSeed;
  int max_k = 4;
  enum class Mode { CountsOnly, FullTreeOracle } mode = Mode::CountsOnly;
  std::string out_csv;
  std::string out_json;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// One CSV row; split arrays are sized kMaxSplitDepth, the first max_k
// entries are meaningful.
struct ResultRow {
  std::int64_t z_left = 1;
  std::int64_t z_right = 1;
  std::array<std::int32_t, kMaxSplitDepth> g_l{}, g_r{};
  std::array<std::int32_t, kMaxSplitDepth> d_l{}, d_r{};
  std::int32_t mrca = 0;

  std::int64_t z_total() const { return z_left + z_right - 1; }
  static ResultRow from_record(const ReducedRecord& rec, int max_k);
};

struct TestOutcome {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string note;

  nlohmann::json to_json() const;
};

struct ResultTable {
  ExperimentConfig config;
  int nt = 0;
  double sigma2 = 0.0;
  std::vector<ResultRow> rows;
  std::vector<TestOutcome> tests;
  double wall_time_seconds = 0.0;

  bool all_tests_pass() const;
  nlohmann::json summary_json() const;
  void write_csv(const std::string& path) const;
  std::string csv_header() const;
};

// Runs the configured replicate batch (deterministic in the master seed),
// evaluates the limit-law test battery on the collected rows, and writes
// the CSV/JSON outputs when paths are set.
ResultTable run_experiment(const ExperimentConfig& config);

// Contiguous-chunk parallel dispatch of replicate indices; fn(replicate)
// must derive its own rng from the replicate index.
void for_each_replicate(std::int64_t replicates, int threads,
                        const std::function<void(std::int64_t)>& fn);

// Same dispatch, exposing the worker slot index for per-thread
// accumulators. Returns the number of slots used.
int for_each_replicate_indexed(std::int64_t replicates, int threads,
                               const std::function<void(int, std::int64_t)>& fn);

int resolve_threads(int requested);

}  // namespace geigertree
