#include "geigertree/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "geigertree/geiger.hpp"
#include "geigertree/limits.hpp"
#include "geigertree/stats.hpp"

namespace geigertree {

std::string version_string() {
#ifdef GEIGERTREE_GIT_DESC
  return std::string("geigertree 0.1.0+") + GEIGERTREE_GIT_DESC;
#else
  return "geigertree 0.1.0";
#endif
}

void ExperimentConfig::validate() const {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("config: t must lie in (0, 1)");
  if (n < 1) throw std::invalid_argument("config: n must be >= 1");
  if (scaled_generation(n, t) < 1)
    throw std::invalid_argument("config: floor(n t) must be >= 1");
  if (replicates < 1) throw std::invalid_argument("config: replicates must be >= 1");
  if (max_k < 1 || max_k > kMaxSplitDepth)
    throw std::invalid_argument("config: max_k must lie in [1, " +
                                std::to_string(kMaxSplitDepth) + "]");
  if (mode == Mode::FullTreeOracle && n > 12)
    throw std::invalid_argument("config: full-tree-oracle mode requires n <= 12");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  OffspringLaw::from_name(law, params);  // validates the law itself
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{
      {"law", law},
      {"params", params},
      {"n", n},
      {"t", t},
      {"replicates", replicates},
      {"seed", seed},
      {"max_k", max_k},
      {"mode", mode == Mode::CountsOnly ? "counts-only" : "full-tree-oracle"},
      {"out_csv", out_csv},
      {"out_json", out_json},
      {"threads", threads}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("law")) c.law = j.at("law").get<std::string>();
  if (j.contains("params")) c.params = j.at("params").get<std::vector<double>>();
  if (j.contains("n")) c.n = j.at("n").get<int>();
  if (j.contains("t")) c.t = j.at("t").get<double>();
  if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::int64_t>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("max_k")) c.max_k = j.at("max_k").get<int>();
  if (j.contains("mode")) {
    const auto m = j.at("mode").get<std::string>();
    if (m == "counts-only")
      c.mode = Mode::CountsOnly;
    else if (m == "full-tree-oracle")
      c.mode = Mode::FullTreeOracle;
    else
      throw std::invalid_argument("config: unknown mode '" + m + "'");
  }
  if (j.contains("out_csv")) c.out_csv = j.at("out_csv").get<std::string>();
  if (j.contains("out_json")) c.out_json = j.at("out_json").get<std::string>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

ResultRow ResultRow::from_record(const ReducedRecord& rec, int max_k) {
  ResultRow row;
  row.z_left = rec.z_left;
  row.z_right = rec.z_right;
  for (int k = 0; k < max_k; ++k) {
    row.g_l[k] = rec.g_left[k];
    row.g_r[k] = rec.g_right[k];
    row.d_l[k] = static_cast<std::int32_t>(rec.d_left[k]);
    row.d_r[k] = static_cast<std::int32_t>(rec.d_right[k]);
  }
  row.mrca = rec.mrca;
  return row;
}

nlohmann::json TestOutcome::to_json() const {
  nlohmann::json j{{"name", name}};
  if (skipped) {
    j["skipped"] = true;
    j["reason"] = note;
    return j;
  }
  j["value"] = value;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  if (!note.empty()) j["note"] = note;
  return j;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int for_each_replicate_indexed(std::int64_t replicates, int threads,
                               const std::function<void(int, std::int64_t)>& fn) {
  const int nthreads = static_cast<int>(
      std::max<std::int64_t>(1, std::min<std::int64_t>(resolve_threads(threads), replicates)));
  if (nthreads == 1) {
    for (std::int64_t r = 0; r < replicates; ++r) fn(0, r);
    return 1;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::int64_t chunk = (replicates + nthreads - 1) / nthreads;
  for (int tid = 0; tid < nthreads; ++tid) {
    const std::int64_t lo = tid * chunk;
    const std::int64_t hi = std::min<std::int64_t>(replicates, lo + chunk);
    pool.emplace_back([&, tid, lo, hi] {
      try {
        for (std::int64_t r = lo; r < hi; ++r) fn(tid, r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return nthreads;
}

void for_each_replicate(std::int64_t replicates, int threads,
                        const std::function<void(std::int64_t)>& fn) {
  for_each_replicate_indexed(replicates, threads,
                             [&fn](int, std::int64_t rep) { fn(rep); });
}

namespace {

std::vector<double> column(const std::vector<ResultRow>& rows,
                           const std::function<double(const ResultRow&)>& get) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(get(r));
  return out;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

bool ResultTable::all_tests_pass() const {
  for (const auto& t : tests)
    if (!t.skipped && !t.pass) return false;
  return true;
}

std::string ResultTable::csv_header() const {
  std::string h = "rep,z_left,z_right,z_total";
  for (const char* side : {"l", "r"})
    for (int k = 1; k <= config.max_k; ++k)
      h += ",g_" + std::string(side) + "_" + std::to_string(k);
  for (const char* side : {"l", "r"})
    for (int k = 1; k <= config.max_k; ++k)
      h += ",d_" + std::string(side) + "_" + std::to_string(k);
  h += ",mrca";
  return h;
}

void ResultTable::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open CSV output '" + path + "'");
  out << csv_header() << '\n';
  for (std::size_t rep = 0; rep < rows.size(); ++rep) {
    const auto& r = rows[rep];
    out << rep << ',' << r.z_left << ',' << r.z_right << ',' << r.z_total();
    for (int k = 0; k < config.max_k; ++k) out << ',' << r.g_l[k];
    for (int k = 0; k < config.max_k; ++k) out << ',' << r.g_r[k];
    for (int k = 0; k < config.max_k; ++k) out << ',' << r.d_l[k];
    for (int k = 0; k < config.max_k; ++k) out << ',' << r.d_r[k];
    out << ',' << r.mrca << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing CSV output '" + path + "'");
}

namespace {

std::vector<TestOutcome> limit_test_battery(const ExperimentConfig& config, int nt, double sigma2,
                                            const std::vector<ResultRow>& rows) {
  std::vector<TestOutcome> tests;
  const double n = static_cast<double>(config.n);
  const double t = config.t;
  const auto spec = limits::LimitSpec::make(t, sigma2);
  const std::int64_t reps = static_cast<std::int64_t>(rows.size());

  auto skipped = [&](const std::string& name, const std::string& why) {
    TestOutcome out;
    out.name = name;
    out.skipped = true;
    out.note = why;
    tests.push_back(out);
  };
  auto ks_test = [&](const std::string& name, std::vector<double> values, double tol,
                     const std::function<double(double)>& cdf) {
    if (reps < 1000) {
      skipped(name, "insufficient replicates for distribution tests (need >= 1000)");
      return;
    }
    stats::SampleSummary sample(std::move(values));
    TestOutcome out;
    out.name = name;
    out.value = stats::ks_statistic(sample, cdf);
    out.tolerance = tol;
    out.pass = out.value <= tol;
    tests.push_back(out);
  };
  auto mean_test = [&](const std::string& name, const std::vector<double>& values, double target,
                       double rel_tol) {
    if (reps < 1000) {
      skipped(name, "insufficient replicates for mean tests (need >= 1000)");
      return;
    }
    TestOutcome out;
    out.name = name;
    out.value = std::abs(mean_of(values) - target) / target;
    out.tolerance = rel_tol;
    out.pass = out.value <= rel_tol;
    out.note = "relative error vs " + std::to_string(target);
    tests.push_back(out);
  };

  const auto z_total = column(rows, [&](const ResultRow& r) { return r.z_total() / n; });
  const auto z_left = column(rows, [&](const ResultRow& r) { return r.z_left / n; });
  const auto z_right = column(rows, [&](const ResultRow& r) { return r.z_right / n; });

  ks_test("ks_z_total_vs_hypoexponential", z_total, 0.03,
          [&](double x) { return limits::limit_sum_cdf(spec, x); });
  mean_test("mean_z_total_over_n", z_total, t * (2.0 - t) * sigma2 / 2.0, 0.05);
  ks_test("ks_z_left_vs_exponential", z_left, 0.03,
          [&](double x) { return -std::expm1(-spec.left_rate * x); });
  mean_test("mean_z_left_over_n", z_left, limits::l_limit_mean(t, sigma2), 0.05);
  ks_test("ks_z_right_vs_exponential", z_right, 0.03,
          [&](double x) { return -std::expm1(-spec.right_rate * x); });
  mean_test("mean_z_right_over_n", z_right, t * sigma2 / 2.0, 0.05);

  const double dnt = static_cast<double>(nt);
  ks_test("ks_g_r_1_vs_uniform",
          column(rows, [&](const ResultRow& r) { return r.g_r[0] / dnt; }), 0.02,
          [](double x) { return limits::nested_uniform_cdf(1, std::clamp(x, 0.0, 1.0)); });
  ks_test("ks_g_l_1_transformed_vs_uniform",
          column(rows,
                 [&](const ResultRow& r) { return limits::g_transform(t, r.g_l[0] / dnt); }),
          0.02, [](double x) { return limits::nested_uniform_cdf(1, std::clamp(x, 0.0, 1.0)); });
  if (config.max_k >= 2) {
    ks_test("ks_g_r_2_vs_nested_uniform_2",
            column(rows, [&](const ResultRow& r) { return r.g_r[1] / dnt; }), 0.02,
            [](double x) { return limits::nested_uniform_cdf(2, std::clamp(x, 0.0, 1.0)); });
    ks_test("ks_g_l_2_transformed_vs_nested_uniform_2",
            column(rows,
                   [&](const ResultRow& r) { return limits::g_transform(t, r.g_l[1] / dnt); }),
            0.02, [](double x) { return limits::nested_uniform_cdf(2, std::clamp(x, 0.0, 1.0)); });
  }

  ks_test("ks_mrca_vs_limit",
          column(rows, [&](const ResultRow& r) { return r.mrca / n; }), 0.03,
          [&](double x) { return limits::mrca_limit_cdf(t, std::clamp(x, 0.0, t)); });

  // Joint CDF of the two first split times on a 5x5 grid over [0, t]^2.
  if (reps >= 1000) {
    double sup = 0.0;
    for (int gx = 1; gx <= 5; ++gx)
      for (int gy = 1; gy <= 5; ++gy) {
        const double x = t * gx / 5.0, y = t * gy / 5.0;
        std::int64_t count = 0;
        for (const auto& r : rows)
          if (r.g_l[0] <= n * x && r.g_r[0] <= n * y) ++count;
        const double emp = static_cast<double>(count) / static_cast<double>(reps);
        sup = std::max(sup, std::abs(emp - limits::joint_split_limit_cdf(1, 1, t, x, y)));
      }
    TestOutcome out;
    out.name = "joint_split_grid_sup_error";
    out.value = sup;
    out.tolerance = 0.03;
    out.pass = sup <= 0.03;
    tests.push_back(out);
  } else {
    skipped("joint_split_grid_sup_error", "insufficient replicates (need >= 1000)");
  }

  // Independence of the transformed first split times.
  if (reps >= 25 * 16) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(rows.size());
    for (const auto& r : rows)
      pairs.emplace_back(limits::g_transform(t, r.g_l[0] / dnt), r.g_r[0] / dnt);
    try {
      const auto res = stats::chi2_independence(pairs, 4);
      TestOutcome out;
      out.name = "chi2_independence_split_times";
      out.value = res.statistic;
      out.tolerance = stats::chi2_critical_99_9(res.dof);
      out.pass = out.value <= out.tolerance;
      out.note = "dof " + std::to_string(res.dof);
      tests.push_back(out);
    } catch (const std::invalid_argument& e) {
      skipped("chi2_independence_split_times", e.what());
    }
  } else {
    skipped("chi2_independence_split_times", "insufficient replicates (need >= 400)");
  }

  return tests;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  ResultTable table;
  table.config = config;
  table.nt = scaled_generation(config.n, config.t);

  const OffspringLaw law = OffspringLaw::from_name(config.law, config.params);
  table.sigma2 = law.sigma2();
  const GfCache cache(law, static_cast<std::size_t>(config.n));

  table.rows.resize(static_cast<std::size_t>(config.replicates));
  const int max_k = config.max_k;
  if (config.mode == ExperimentConfig::Mode::CountsOnly) {
    for_each_replicate(config.replicates, config.threads, [&](std::int64_t rep) {
      Rng rng = make_replicate_rng(config.seed, static_cast<std::uint64_t>(rep));
      const auto trace = simulate_geiger_decomposition(cache, config.n, config.t, rng);
      table.rows[static_cast<std::size_t>(rep)] =
          ResultRow::from_record(compute_reduced_record(trace, max_k), max_k);
    });
  } else {
    for_each_replicate(config.replicates, config.threads, [&](std::int64_t rep) {
      Rng rng = make_replicate_rng(config.seed, static_cast<std::uint64_t>(rep));
      const auto tree = sample_conditioned_tree_rejection(law, config.n, rng);
      const auto ref = decompose_reference_tree(tree, config.n, config.t);
      table.rows[static_cast<std::size_t>(rep)] =
          ResultRow::from_record(compute_reduced_record(ref.trace, max_k), max_k);
    });
  }

  table.tests = limit_test_battery(config, table.nt, table.sigma2, table.rows);
  table.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!config.out_csv.empty()) table.write_csv(config.out_csv);
  if (!config.out_json.empty()) {
    std::ofstream out(config.out_json, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open JSON output '" + config.out_json + "'");
    out << table.summary_json().dump(2) << '\n';
    if (!out)
      throw std::runtime_error("failed while writing JSON output '" + config.out_json + "'");
  }
  return table;
}

nlohmann::json ResultTable::summary_json() const {
  nlohmann::json summary;
  const double n = static_cast<double>(config.n);
  auto block = [&](const std::function<double(const ResultRow&)>& get) {
    std::vector<double> xs = column(rows, get);
    stats::SampleSummary s(std::move(xs));
    return nlohmann::json{
        {"mean", s.mean()}, {"std_error", s.std_error()}, {"mean_over_n", s.mean() / n}};
  };
  summary["z_left"] = block([](const ResultRow& r) { return static_cast<double>(r.z_left); });
  summary["z_right"] = block([](const ResultRow& r) { return static_cast<double>(r.z_right); });
  summary["z_total"] = block([](const ResultRow& r) { return static_cast<double>(r.z_total()); });
  summary["mrca"] = block([](const ResultRow& r) { return static_cast<double>(r.mrca); });

  // Conditional one-survivor frequencies at the first split.
  std::int64_t left_pos = 0, left_one = 0, right_pos = 0, right_one = 0;
  for (const auto& r : rows) {
    if (r.g_l[0] > 0) {
      ++left_pos;
      if (r.d_l[0] == 1) ++left_one;
    }
    if (r.g_r[0] > 0) {
      ++right_pos;
      if (r.d_r[0] == 1) ++right_one;
    }
  }
  if (left_pos > 0)
    summary["p_d_l_1_given_split"] =
        static_cast<double>(left_one) / static_cast<double>(left_pos);
  if (right_pos > 0)
    summary["p_d_r_1_given_split"] =
        static_cast<double>(right_one) / static_cast<double>(right_pos);

  nlohmann::json tests_json = nlohmann::json::array();
  for (const auto& t : tests) tests_json.push_back(t.to_json());

  nlohmann::json j;
  j["config"] = config.to_json();
  j["version"] = version_string();
  j["wall_time_seconds"] = wall_time_seconds;
  j["nt"] = nt;
  j["sigma2"] = sigma2;
  j["rows"] = rows.size();
  j["summary"] = summary;
  j["tests"] = tests_json;
  if (rows.size() < 1000) j["note"] = "insufficient replicates for distribution tests";
  return j;
}

}  // namespace geigertree
