#include "geigertree/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "geigertree/experiment.hpp"
#include "geigertree/geiger.hpp"
#include "geigertree/limits.hpp"
#include "geigertree/moments.hpp"
#include "geigertree/reduce.hpp"
#include "geigertree/stats.hpp"

namespace geigertree {

Budget budget_from_name(std::string_view name) {
  if (name == "quick") return Budget::Quick;
  if (name == "standard") return Budget::Standard;
  if (name == "deep") return Budget::Deep;
  throw std::invalid_argument("unknown budget '" + std::string(name) +
                              "' (expected quick, standard or deep)");
}

std::string budget_name(Budget budget) {
  switch (budget) {
    case Budget::Quick: return "quick";
    case Budget::Standard: return "standard";
    case Budget::Deep: return "deep";
  }
  return "standard";
}

nlohmann::json SubCheck::to_json() const {
  nlohmann::json j{{"name", name},
                   {"value", value},
                   {"bound", bound},
                   {"comparison", lower_bound ? ">=" : "<="},
                   {"pass", pass}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

bool CriterionResult::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string CriterionResult::line() const {
  std::ostringstream os;
  os << (pass() ? "[PASS] " : "[FAIL] ") << id << "  " << title;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << "  (" << checks.size() << " checks, " << seconds << "s)";
  if (!pass()) {
    for (const auto& c : checks)
      if (!c.pass) {
        os.precision(6);
        os << "\n         failed: " << c.name << " value " << c.value
           << (c.lower_bound ? " < " : " > ") << c.bound;
        if (!c.detail.empty()) os << "  [" << c.detail << "]";
      }
  }
  return os.str();
}

nlohmann::json CriterionResult::to_json() const {
  nlohmann::json checks_json = nlohmann::json::array();
  for (const auto& c : checks) checks_json.push_back(c.to_json());
  return nlohmann::json{{"id", id},
                        {"title", title},
                        {"pass", pass()},
                        {"seconds", seconds},
                        {"checks", checks_json}};
}

bool VerifyReport::all_pass() const {
  for (const auto& c : criteria)
    if (!c.pass()) return false;
  return true;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : criteria) arr.push_back(c.to_json());
  return nlohmann::json{{"budget", budget_name(budget)}, {"seed", seed},
                        {"threads", threads},           {"version", version_string()},
                        {"wall_seconds", wall_seconds}, {"pass", all_pass()},
                        {"criteria", arr}};
}

namespace {

struct Tolerances {
  int n_std = 2000;
  std::int64_t reps_std = 100'000;
  std::vector<int> a7_ns = {250, 1000, 4000};
  std::int64_t a7_reps = 20'000;
  std::int64_t a10_reps = 1'000'000;
  double ks_limit = 0.03;   // scaled population laws, MRCA
  double ks_split = 0.02;   // split-time laws
  double mean_rel = 0.05;
  double grid_sup = 0.03;
  double tv_exact = 0.01;
  double tv_joint = 0.015;
  double mrca_point_band = 0.02;
  double d_threshold = 0.95;
  double mc_scale = 1.0;  // widens the stated bands of sampler spot checks
};

Tolerances make_tolerances(Budget budget) {
  Tolerances tol;
  if (budget == Budget::Quick) {
    tol.n_std = 1000;
    tol.reps_std = 20'000;
    tol.a7_reps = 5'000;
    tol.a10_reps = 200'000;
    tol.ks_limit *= 2.0;
    tol.ks_split *= 2.0;
    tol.mean_rel *= 2.0;
    tol.grid_sup *= 2.0;
    tol.tv_exact *= 2.5;
    tol.tv_joint *= 2.5;
    tol.mrca_point_band *= 2.0;
    tol.d_threshold = 0.93;
    tol.mc_scale = 2.0;
  } else if (budget == Budget::Deep) {
    tol.a7_ns.push_back(8000);
  }
  return tol;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  return splitmix64(master ^ (salt * 0xD1B54A32D192ED03ULL));
}

SubCheck le(std::string name, double value, double bound) {
  SubCheck c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.pass = value <= bound;
  return c;
}

SubCheck ge(std::string name, double value, double bound) {
  SubCheck c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.lower_bound = true;
  c.pass = value >= bound;
  return c;
}

struct Batch {
  std::string law_name;
  int n = 0, nt = 0;
  double t = 0.5;
  double sigma2 = 0.0;
  std::vector<ResultRow> rows;
  stats::SplitProfileAccumulator profile;
};

Batch run_decomposition_batch(const OffspringLaw& law, int n, double t, std::int64_t reps,
                              std::uint64_t seed, int threads, bool with_profile) {
  Batch batch;
  batch.law_name = law.name();
  batch.n = n;
  batch.t = t;
  batch.nt = scaled_generation(n, t);
  batch.sigma2 = law.sigma2();
  const GfCache cache(law, static_cast<std::size_t>(n));
  batch.rows.resize(static_cast<std::size_t>(reps));

  const int slots = resolve_threads(threads);
  std::vector<stats::SplitProfileAccumulator> accs;
  if (with_profile)
    accs.assign(static_cast<std::size_t>(slots), stats::SplitProfileAccumulator(n, batch.nt));

  for_each_replicate_indexed(reps, threads, [&](int tid, std::int64_t rep) {
    Rng rng = make_replicate_rng(seed, static_cast<std::uint64_t>(rep));
    const auto trace = simulate_geiger_decomposition(cache, n, t, rng);
    batch.rows[static_cast<std::size_t>(rep)] =
        ResultRow::from_record(compute_reduced_record(trace, 4), 4);
    if (with_profile) accs[static_cast<std::size_t>(tid)].add(trace);
  });
  if (with_profile) {
    batch.profile = stats::SplitProfileAccumulator(n, batch.nt);
    for (const auto& a : accs) batch.profile.merge(a);
  }
  return batch;
}

std::vector<double> scaled_column(const Batch& batch,
                                  const std::function<double(const ResultRow&)>& get) {
  std::vector<double> out;
  out.reserve(batch.rows.size());
  for (const auto& r : batch.rows) out.push_back(get(r));
  return out;
}

double ks_of(const Batch& batch, const std::function<double(const ResultRow&)>& get,
             const std::function<double(double)>& cdf) {
  stats::SampleSummary sample(scaled_column(batch, get));
  return stats::ks_statistic(sample, cdf);
}

double mean_rel_err(const Batch& batch, const std::function<double(const ResultRow&)>& get,
                    double target) {
  const auto xs = scaled_column(batch, get);
  double s = 0.0;
  for (double x : xs) s += x;
  return std::abs(s / static_cast<double>(xs.size()) - target) / target;
}

using CountMap = std::map<std::int64_t, double>;

CountMap normalize(const std::unordered_map<std::int64_t, std::int64_t>& counts,
                   std::int64_t total) {
  CountMap law;
  for (const auto& [k, v] : counts)
    law[k] = static_cast<double>(v) / static_cast<double>(total);
  return law;
}

constexpr std::int64_t pair_key(std::int64_t a, std::int64_t b) {
  return (a << 31) + b;
}

// Monte Carlo laws of the decomposition at small n: the total count and
// the (left, right) pair, both from the spine sampler, plus the pair law
// from the rejection reference sampler.
struct SmallNLaws {
  CountMap geiger_total;
  CountMap geiger_pair;
  CountMap rejection_pair;
};

SmallNLaws small_n_laws(const OffspringLaw& law, int n, double t, std::int64_t reps,
                        std::uint64_t seed, int threads) {
  const GfCache cache(law, static_cast<std::size_t>(n));
  const int slots = resolve_threads(threads);
  std::vector<std::unordered_map<std::int64_t, std::int64_t>> totals(slots), pairs(slots),
      ref_pairs(slots);

  for_each_replicate_indexed(reps, threads, [&](int tid, std::int64_t rep) {
    Rng rng = make_replicate_rng(seed, static_cast<std::uint64_t>(rep));
    const auto trace = simulate_geiger_decomposition(cache, n, t, rng);
    ++totals[tid][trace.z_total()];
    ++pairs[tid][pair_key(trace.z_left(), trace.z_right())];
  });
  const std::uint64_t ref_seed = derive_seed(seed, 0xA10);
  for_each_replicate_indexed(reps, threads, [&](int tid, std::int64_t rep) {
    Rng rng = make_replicate_rng(ref_seed, static_cast<std::uint64_t>(rep));
    const auto tree = sample_conditioned_tree_rejection(law, n, rng);
    const auto ref = decompose_reference_tree(tree, n, t);
    ++ref_pairs[tid][pair_key(ref.z_left, ref.z_right)];
  });

  auto merge = [&](std::vector<std::unordered_map<std::int64_t, std::int64_t>>& maps) {
    std::unordered_map<std::int64_t, std::int64_t> all;
    for (auto& m : maps)
      for (const auto& [k, v] : m) all[k] += v;
    return normalize(all, reps);
  };
  SmallNLaws out;
  out.geiger_total = merge(totals);
  out.geiger_pair = merge(pairs);
  out.rejection_pair = merge(ref_pairs);
  return out;
}

// KS distance between the exact lattice law of a scaled split time and its
// continuous limit: the value the empirical statistic concentrates on as
// the replicate count grows. Reported next to the A4/A5 checks so a
// tolerance breach can be told apart from a sampling problem.
double split_ks_floor(const GfCache& cache, int n, double t, Side side, int k) {
  const int nt = scaled_generation(n, t);
  const auto cdf = moments::split_time_cdf_exact(cache, n, t, side, k);
  auto limit_at = [&](int m) {
    double u = static_cast<double>(m) / nt;
    if (side == Side::Left) u = limits::g_transform(t, std::min(u, 1.0));
    return limits::nested_uniform_cdf(k, std::min(u, 1.0));
  };
  double worst = 0.0;
  for (int m = 0; m <= nt; ++m) {
    worst = std::max(worst, std::abs(cdf[m] - limit_at(m)));
    if (m + 1 <= nt) worst = std::max(worst, std::abs(cdf[m] - limit_at(m + 1)));
  }
  return worst;
}

double simultaneous_band(std::int64_t points) {
  // Per-point threshold at the family-wise level that a 3-sigma band
  // carries for a single test (two-sided 0.27%), Sidak-adjusted.
  const double alpha = 0.0026997960632601866;
  const double per_test =
      1.0 - std::pow(1.0 - alpha, 1.0 / static_cast<double>(points));
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - per_test / 2.0);
}

}  // namespace

VerifyReport verify_suite(Budget budget, std::uint64_t seed, int threads,
                          std::ostream* progress) {
  const auto suite_start = std::chrono::steady_clock::now();
  const Tolerances tol = make_tolerances(budget);
  const double t = 0.5;

  VerifyReport report;
  report.budget = budget;
  report.seed = seed;
  report.threads = resolve_threads(threads);

  auto note = [&](const std::string& msg) {
    if (progress) *progress << msg << std::endl;
  };
  auto push = [&](CriterionResult&& c) {
    note(c.line());
    report.criteria.push_back(std::move(c));
  };
  auto timed = [&](const std::string& id, const std::string& title,
                   const std::function<void(CriterionResult&)>& body) {
    CriterionResult c;
    c.id = id;
    c.title = title;
    const auto start = std::chrono::steady_clock::now();
    body(c);
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    push(std::move(c));
  };

  const OffspringLaw binary = OffspringLaw::binary();
  const OffspringLaw geometric = OffspringLaw::geometric();

  note("# simulating decomposition batches: n = " + std::to_string(tol.n_std) +
       ", replicates = " + std::to_string(tol.reps_std) + " per law");
  std::vector<Batch> batches;
  batches.push_back(run_decomposition_batch(binary, tol.n_std, t, tol.reps_std,
                                            derive_seed(seed, 0xB1), threads, true));
  batches.push_back(run_decomposition_batch(geometric, tol.n_std, t, tol.reps_std,
                                            derive_seed(seed, 0x6E0), threads, true));

  // A1..A3: scaled populations against the exponential-family limits.
  timed("A1", "scaled total population vs hypoexponential limit", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const auto spec = limits::LimitSpec::make(b.t, b.sigma2);
      const double n = b.n;
      c.checks.push_back(le("ks_z_total[" + b.law_name + "]",
                            ks_of(b, [&](const ResultRow& r) { return r.z_total() / n; },
                                  [&](double x) { return limits::limit_sum_cdf(spec, x); }),
                            tol.ks_limit));
      c.checks.push_back(le(
          "mean_rel_err_z_total[" + b.law_name + "]",
          mean_rel_err(b, [&](const ResultRow& r) { return r.z_total() / n; },
                       b.t * (2.0 - b.t) * b.sigma2 / 2.0),
          tol.mean_rel));
    }
  });

  timed("A2", "scaled left part vs exponential limit", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const auto spec = limits::LimitSpec::make(b.t, b.sigma2);
      const double n = b.n;
      c.checks.push_back(le("ks_z_left[" + b.law_name + "]",
                            ks_of(b, [&](const ResultRow& r) { return r.z_left / n; },
                                  [&](double x) { return -std::expm1(-spec.left_rate * x); }),
                            tol.ks_limit));
      c.checks.push_back(le("mean_rel_err_z_left[" + b.law_name + "]",
                            mean_rel_err(b, [&](const ResultRow& r) { return r.z_left / n; },
                                         limits::l_limit_mean(b.t, b.sigma2)),
                            tol.mean_rel));
    }
  });

  timed("A3", "scaled right part vs exponential limit", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const auto spec = limits::LimitSpec::make(b.t, b.sigma2);
      const double n = b.n;
      c.checks.push_back(le("ks_z_right[" + b.law_name + "]",
                            ks_of(b, [&](const ResultRow& r) { return r.z_right / n; },
                                  [&](double x) { return -std::expm1(-spec.right_rate * x); }),
                            tol.ks_limit));
      c.checks.push_back(le("mean_rel_err_z_right[" + b.law_name + "]",
                            mean_rel_err(b, [&](const ResultRow& r) { return r.z_right / n; },
                                         b.t * b.sigma2 / 2.0),
                            tol.mean_rel));
    }
  });

  auto floor_note = [&](const Batch& b, Side side, int k) {
    const OffspringLaw& law = b.law_name == "binary" ? binary : geometric;
    const GfCache cache(law, static_cast<std::size_t>(b.n));
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "exact finite-n KS floor " << split_ks_floor(cache, b.n, b.t, side, k);
    return os.str();
  };

  timed("A4", "right split times vs nested uniforms", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const double nt = b.nt;
      for (int k = 1; k <= 2; ++k) {
        auto check =
            le("ks_g_r_" + std::to_string(k) + "[" + b.law_name + "]",
               ks_of(b,
                     [&, k](const ResultRow& r) { return r.g_r[k - 1] / nt; },
                     [k](double x) {
                       return limits::nested_uniform_cdf(k, std::clamp(x, 0.0, 1.0));
                     }),
               tol.ks_split);
        check.detail = floor_note(b, Side::Right, k);
        c.checks.push_back(std::move(check));
      }
    }
  });

  timed("A5", "transformed left split times vs nested uniforms", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const double nt = b.nt;
      for (int k = 1; k <= 2; ++k) {
        auto check =
            le("ks_g_l_" + std::to_string(k) + "_transformed[" + b.law_name + "]",
               ks_of(b,
                     [&, k](const ResultRow& r) {
                       return limits::g_transform(b.t, r.g_l[k - 1] / nt);
                     },
                     [k](double x) {
                       return limits::nested_uniform_cdf(k, std::clamp(x, 0.0, 1.0));
                     }),
               tol.ks_split);
        check.detail = floor_note(b, Side::Left, k);
        c.checks.push_back(std::move(check));
      }
    }
  });

  timed("A6", "joint split-time law and asymptotic independence", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const double n = b.n;
      const auto reps = static_cast<double>(b.rows.size());
      double sup = 0.0;
      for (int gx = 1; gx <= 5; ++gx)
        for (int gy = 1; gy <= 5; ++gy) {
          const double x = b.t * gx / 5.0, y = b.t * gy / 5.0;
          std::int64_t count = 0;
          for (const auto& r : b.rows)
            if (r.g_l[0] <= n * x && r.g_r[0] <= n * y) ++count;
          sup = std::max(sup, std::abs(count / reps -
                                       limits::joint_split_limit_cdf(1, 1, b.t, x, y)));
        }
      c.checks.push_back(le("joint_grid_sup[" + b.law_name + "]", sup, tol.grid_sup));

      // three disjoint thirds as independent runs
      const double critical = stats::chi2_critical_99_9(9);
      int below = 0;
      const std::size_t third = b.rows.size() / 3;
      for (int run = 0; run < 3; ++run) {
        std::vector<std::pair<double, double>> pairs;
        pairs.reserve(third);
        for (std::size_t i = run * third; i < (run + 1) * third; ++i) {
          const auto& r = b.rows[i];
          pairs.emplace_back(limits::g_transform(b.t, r.g_l[0] / static_cast<double>(b.nt)),
                             r.g_r[0] / static_cast<double>(b.nt));
        }
        if (stats::chi2_independence(pairs, 4).statistic <= critical) ++below;
      }
      c.checks.push_back(ge("chi2_runs_below_99.9pct[" + b.law_name + "]",
                            static_cast<double>(below), 2.0));
    }
  });

  timed("A7", "single surviving sibling at the first split", [&](CriterionResult& c) {
    for (const OffspringLaw* law : {&binary, &geometric}) {
      std::vector<double> p_left, p_right;
      for (std::size_t idx = 0; idx < tol.a7_ns.size(); ++idx) {
        const int n = tol.a7_ns[idx];
        const Batch b = run_decomposition_batch(
            *law, n, t, tol.a7_reps, derive_seed(seed, 0xA7000 + idx * 16 + (law == &geometric)),
            threads, false);
        std::int64_t lpos = 0, lone = 0, rpos = 0, rone = 0;
        for (const auto& r : b.rows) {
          if (r.g_l[0] > 0) {
            ++lpos;
            if (r.d_l[0] == 1) ++lone;
          }
          if (r.g_r[0] > 0) {
            ++rpos;
            if (r.d_r[0] == 1) ++rone;
          }
        }
        p_left.push_back(static_cast<double>(lone) / static_cast<double>(lpos));
        p_right.push_back(static_cast<double>(rone) / static_cast<double>(rpos));
      }
      auto trend = [&](const char* side, const std::vector<double>& p) {
        double min_step = 1.0;
        for (std::size_t i = 0; i + 1 < p.size(); ++i)
          min_step = std::min(min_step, p[i + 1] - p[i]);
        c.checks.push_back(ge(std::string("nondecreasing_") + side + "[" + law->name() + "]",
                              min_step, 0.0));
        c.checks.push_back(ge(std::string("final_") + side + "[" + law->name() + "]", p.back(),
                              tol.d_threshold));
      };
      trend("d_l", p_left);
      trend("d_r", p_right);
    }
  });

  timed("A8", "most recent common ancestor vs limit law", [&](CriterionResult& c) {
    for (const auto& b : batches) {
      const double n = b.n;
      c.checks.push_back(
          le("ks_mrca[" + b.law_name + "]",
             ks_of(b, [&](const ResultRow& r) { return r.mrca / n; },
                   [&](double x) { return limits::mrca_limit_cdf(b.t, std::clamp(x, 0.0, b.t)); }),
             tol.ks_limit));
      std::int64_t count = 0;
      for (const auto& r : b.rows)
        if (r.mrca / n <= 0.25) ++count;
      const double point = static_cast<double>(count) / static_cast<double>(b.rows.size());
      c.checks.push_back(le("mrca_cdf_quarter_abs_err[" + b.law_name + "]",
                            std::abs(point - 2.0 / 3.0), tol.mrca_point_band));
    }
  });

  timed("A9", "exact moment convergence (deterministic)", [&](CriterionResult& c) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<moments::MomentReport> reps;
    for (int n : {1000, 10'000, 100'000}) {
      const GfCache cache(geometric, static_cast<std::size_t>(n));
      reps.push_back(moments::moment_report(cache, n, t));
    }
    auto series = [&](const char* name, const std::function<double(const moments::MomentReport&)>& get,
                      double final_bound) {
      double worst_increase = -1.0;
      for (std::size_t i = 0; i + 1 < reps.size(); ++i)
        worst_increase = std::max(worst_increase, get(reps[i + 1]) - get(reps[i]));
      c.checks.push_back(le(std::string("monotone_err_") + name, worst_increase, 0.0));
      c.checks.push_back(le(std::string("final_err_") + name, get(reps.back()), final_bound));
    };
    series("a_nt", [](const auto& r) { return r.rel_err_a; }, 0.01);
    series("c_nt", [](const auto& r) { return r.rel_err_c; }, 0.01);
    series("b_nt", [](const auto& r) { return r.rel_err_b; }, 0.01);
    series("second_left", [](const auto& r) { return r.rel_err_second_left; }, 0.03);
    series("second_right", [](const auto& r) { return r.rel_err_second_right; }, 0.03);
    series("second_l", [](const auto& r) { return r.rel_err_second_l; }, 0.03);
    series("i2_over_n2",
           [](const auto& r) {
             return r.i_n2 / (static_cast<double>(r.n) * static_cast<double>(r.n));
           },
           1e-3);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.checks.push_back(le("runtime_seconds", secs, 60.0));
  });

  timed("A10", "small-n oracle equivalence", [&](CriterionResult& c) {
    std::size_t salt = 0;
    for (const OffspringLaw* law : {&binary, &geometric}) {
      for (int n : {2, 3, 4}) {
        const auto laws = small_n_laws(*law, n, t, tol.a10_reps,
                                       derive_seed(seed, 0xA100 + 16 * salt++), threads);
        const GfCache cache(*law, static_cast<std::size_t>(n));
        const auto exact = moments::exact_conditional_law(cache, n, t, 1 << 20);
        c.checks.push_back(le("tv_total_vs_exact[" + law->name() + ",n=" + std::to_string(n) + "]",
                              stats::tv_distance(laws.geiger_total, exact.pmf), tol.tv_exact));
        c.checks.push_back(
            le("tv_pair_vs_rejection[" + law->name() + ",n=" + std::to_string(n) + "]",
               stats::tv_distance(laws.geiger_pair, laws.rejection_pair), tol.tv_joint));
      }
    }
  });

  timed("A11", "split probability profile vs asymptotic rates", [&](CriterionResult& c) {
    // Pointwise z-scores over the central band; the all-points bound uses
    // the family-wise equivalent of a single 3-sigma band so the check
    // tests the same confidence statement regardless of band size.
    std::int64_t points = 0;
    double max_z = 0.0;
    std::vector<SubCheck> mids;
    for (const auto& b : batches) {
      const int lo = b.nt / 4, hi = 3 * b.nt / 4;
      for (Side side : {Side::Left, Side::Right}) {
        const auto prof = b.profile.profile(side);
        double mid_z = 0.0;
        for (const auto& p : prof) {
          if (p.i < lo || p.i > hi) continue;
          ++points;
          const double z = std::abs(p.estimate - p.asymptote) / p.std_error;
          max_z = std::max(max_z, z);
          if (p.i == b.nt / 2) mid_z = z;
        }
        mids.push_back(le(std::string("mid_band_z_") +
                              (side == Side::Left ? "left" : "right") + "[" + b.law_name + "]",
                          mid_z, 3.0));
      }
    }
    c.checks.push_back(le("max_abs_z_all_points", max_z, simultaneous_band(points)));
    for (auto& m : mids) c.checks.push_back(std::move(m));
  });

  timed("A12", "closed-form example suite", [&](CriterionResult& c) {
    auto close = [&](const std::string& name, double measured, double expected,
                     double tolerance = 1e-9) {
      c.checks.push_back(le(name, std::abs(measured - expected), tolerance));
    };

    // offspring laws and extinction iterates
    close("sigma2_binary", binary.sigma2(), 1.0, 0.0);
    close("sigma2_geometric", geometric.sigma2(), 2.0, 0.0);
    const OffspringLaw poisson = OffspringLaw::poisson();
    double poisson_mean = 0.0;
    for (std::size_t k = 0; k < poisson.support_limit(); ++k)
      poisson_mean += static_cast<double>(k) * poisson.pmf(k);
    close("poisson_mean_from_table", poisson_mean, 1.0, 1e-10);

    const GfCache bin3(binary, 3);
    close("q_binary_1", bin3.q(1), 0.5, 1e-12);
    close("q_binary_2", bin3.q(2), 5.0 / 8.0, 1e-12);
    close("q_binary_3", bin3.q(3), 89.0 / 128.0, 1e-12);
    const GfCache geo3(geometric, 3);
    close("q_geometric_1", geo3.q(1), 0.5, 1e-12);
    close("q_geometric_2", geo3.q(2), 2.0 / 3.0, 1e-12);
    close("q_geometric_3", geo3.q(3), 3.0 / 4.0, 1e-12);
    const GfCache any0(binary, 0);
    close("q_any_horizon0", any0.q(0), 0.0, 0.0);

    close("spine_pmf_binary_m1_j1k2", spine_step_pmf(bin3, 1, 1, 2), 2.0 / 3.0, 1e-12);
    close("spine_pmf_binary_m1_j2k2", spine_step_pmf(bin3, 1, 2, 2), 1.0 / 3.0, 1e-12);
    close("spine_pmf_geometric_m1_j1k1", spine_step_pmf(geo3, 1, 1, 1), 3.0 / 8.0, 1e-12);
    close("spine_pmf_m0_j1k2_is_c0p2", spine_step_pmf(bin3, 0, 1, 2),
          bin3.c(0) * binary.pmf(2), 1e-15);
    close("spine_pmf_m0_j2k2_zero", spine_step_pmf(bin3, 0, 2, 2), 0.0, 0.0);

    const TiltedLaw tilt_bin(bin3, 1);
    close("tilted_binary_m1_p0", tilt_bin.pmf(0), 4.0 / 5.0, 1e-12);
    close("tilted_binary_m1_p2", tilt_bin.pmf(2), 1.0 / 5.0, 1e-12);
    const TiltedLaw tilt0(bin3, 0);
    close("tilted_m0_point_mass", tilt0.pmf(0), 1.0, 0.0);
    const TiltedLaw tilt_geo(geo3, 1);
    for (int j = 0; j <= 6; ++j)
      close("tilted_geometric_m1_p" + std::to_string(j), tilt_geo.pmf(j),
            0.75 * std::pow(0.25, j), 1e-12);

    // limit formulas
    close("nested_k1_x037", limits::nested_uniform_cdf(1, 0.37), 0.37, 1e-12);
    close("nested_k2_xinv_e", limits::nested_uniform_cdf(2, 1.0 / std::exp(1.0)),
          2.0 / std::exp(1.0), 1e-12);
    close("nested_k5_at_b", limits::nested_uniform_cdf(5, 1.0), 1.0, 0.0);
    close("nested_mean_k1", limits::nested_uniform_mean(1), 0.5, 0.0);
    close("nested_mean_k3", limits::nested_uniform_mean(3), 0.125, 0.0);
    close("nested_mean_k2_2_6", limits::nested_uniform_mean(2, 2.0, 6.0), 3.0, 0.0);
    close("g_transform_0", limits::g_transform(0.3, 0.0), 0.0, 0.0);
    close("g_transform_1", limits::g_transform(0.3, 1.0), 1.0, 1e-12);
    close("g_transform_half_half", limits::g_transform(0.5, 0.5), 2.0 / 3.0, 1e-12);
    close("g_transform_half_quarter", limits::g_transform(0.5, 0.25), 0.4, 1e-12);
    close("split_right_k1", limits::split_limit_cdf(Side::Right, 1, 0.5, 0.2), 0.4, 1e-12);
    close("split_left_k1", limits::split_limit_cdf(Side::Left, 1, 0.5, 0.25), 2.0 / 3.0, 1e-12);
    close("split_right_k3_at_t", limits::split_limit_cdf(Side::Right, 3, 0.5, 0.5), 1.0, 1e-12);
    close("split_left_k3_at_t", limits::split_limit_cdf(Side::Left, 3, 0.5, 0.5), 1.0, 1e-12);
    close("joint_full_mass", limits::joint_split_limit_cdf(1, 1, 0.5, 0.5, 0.5), 1.0, 1e-12);
    close("joint_quarter", limits::joint_split_limit_cdf(1, 1, 0.5, 0.25, 0.25), 1.0 / 3.0,
          1e-12);
    close("joint_product", limits::joint_split_limit_cdf(1, 1, 0.5, 0.25, 0.2), 4.0 / 15.0,
          1e-12);
    close("mrca_at_0", limits::mrca_limit_cdf(0.5, 0.0), 0.0, 0.0);
    close("mrca_quarter", limits::mrca_limit_cdf(0.5, 0.25), 2.0 / 3.0, 1e-12);
    close("mrca_at_t", limits::mrca_limit_cdf(0.5, 0.5), 1.0, 0.0);
    const auto spec = limits::LimitSpec::make(0.5, 1.0);
    close("limit_sum_at_0", limits::limit_sum_cdf(spec, 0.0), 0.0, 0.0);
    close("limit_sum_far_right", limits::limit_sum_cdf(spec, 10.0), 1.0, 1e-9);
    close("l_tail_at_0", limits::l_limit_tail(0.5, 1.0, 0.0), 1.0, 0.0);
    close("l_tail_at_mean", limits::l_limit_tail(0.5, 1.0, 0.125), std::exp(-1.0), 1e-12);
    for (double tt : {0.25, 0.5, 0.75})
      for (double s2 : {1.0, 2.0})
        close("l_tail_identity", limits::l_limit_tail(tt, s2, limits::l_limit_mean(tt, s2)),
              std::exp(-1.0), 1e-12);

    // hypoexponential mean by quadrature of the upper tail
    {
      const double mean = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) { return 1.0 - limits::limit_sum_cdf(spec, x); }, 0.0, 60.0, 12, 1e-12);
      close("limit_sum_mean_quadrature", mean, 0.375, 1e-9);
    }
    // nested-uniform mean vs CDF by quadrature, k <= 6
    for (int k = 1; k <= 6; ++k) {
      const double mean = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) { return 1.0 - limits::nested_uniform_cdf(k, x, 0.0, 1.0); }, 0.0, 1.0,
          12, 1e-12);
      close("nested_mean_cdf_consistency_k" + std::to_string(k), mean,
            limits::nested_uniform_mean(k), 1e-8);
    }
    // marginal-vs-transform consistency on a grid
    {
      double worst = 0.0;
      for (double tt : {0.3, 0.5, 0.7})
        for (int k = 1; k <= 4; ++k)
          for (int gx = 1; gx <= 20; ++gx) {
            const double x = tt * gx / 20.0;
            worst = std::max(worst,
                             std::abs(limits::split_limit_cdf(Side::Left, k, tt, x) -
                                      limits::nested_uniform_cdf(
                                          k, limits::g_transform(tt, x / tt), 0.0, 1.0)));
          }
      c.checks.push_back(le("split_left_vs_transformed_nested_grid", worst, 1e-10));
    }
    // MRCA law vs joint law at the diagonal
    {
      double worst = 0.0;
      for (double tt : {0.3, 0.5, 0.7})
        for (int gx = 0; gx <= 20; ++gx) {
          const double x = tt * gx / 20.0;
          worst = std::max(worst, std::abs(limits::mrca_limit_cdf(tt, x) -
                                           (1.0 - limits::joint_split_limit_cdf(
                                                      1, 1, tt, tt - x, tt - x))));
        }
      c.checks.push_back(le("mrca_vs_joint_diagonal_grid", worst, 1e-12));
    }

    // exact moments: fragment means and counts
    {
      const int n = 100'000;
      const GfCache cache(geometric, static_cast<std::size_t>(n));
      const int nt = scaled_generation(n, t);
      close("left_fragment_i0", moments::expected_left_fragment(cache, n, t, 0), 1.0, 0.0);
      const double frag = moments::expected_left_fragment(cache, n, t, nt);
      c.checks.push_back(le("left_fragment_rel_err_vs_(1-t)^2",
                            std::abs(frag - 0.25) / 0.25, 0.02));
      const int mid = nt / 2;
      const double asym = std::pow(static_cast<double>(n) * (1 - t) /
                                       (mid + static_cast<double>(n) * (1 - t)),
                                   2.0);
      c.checks.push_back(le("left_fragment_profile_ratio_err",
                            std::abs(moments::expected_left_fragment(cache, n, t, mid) / asym -
                                     1.0),
                            0.02));
      close("left_fragment_second_i0", moments::expected_left_fragment_second(cache, n, t, 0),
            0.0, 0.0);
      const double second = moments::expected_left_fragment_second(cache, n, t, nt);
      const double second_asym = nt * std::pow(1.0 - t, 3.0) * geometric.sigma2();
      c.checks.push_back(
          le("left_fragment_second_ratio_err", std::abs(second / second_asym - 1.0), 0.03));

      const GfCache bcache(binary, static_cast<std::size_t>(n));
      c.checks.push_back(le("a_over_n_binary_rel_err",
                            std::abs(moments::expected_left_count(bcache, n, t) / n - 0.125) /
                                0.125,
                            0.01));
      c.checks.push_back(le("c_over_n_binary_rel_err",
                            std::abs(moments::expected_right_count(bcache, n, t) / n - 0.25) /
                                0.25,
                            0.01));
      const auto lm = moments::l_moments_exact(cache, n, t);
      c.checks.push_back(le("b_over_n_rel_err", std::abs(lm.mean / n - 0.25) / 0.25, 0.01));
      c.checks.push_back(le("l_second_over_n2_rel_err",
                            std::abs(lm.second / (static_cast<double>(n) * n) - 0.125) / 0.125,
                            0.03));
      c.checks.push_back(le("a_over_b_err",
                            std::abs(moments::expected_left_count(cache, n, t) / lm.mean - 1.0),
                            0.02));
      close("d_n_times_surv", (1.0 / cache.surv(n)) * cache.surv(n), 1.0, 1e-15);
    }

    // exact conditional law at n = 2
    {
      const GfCache cache(geometric, 2);
      const auto law = moments::exact_conditional_law(cache, 2, t, 64);
      close("cond_law_geometric_n2_j1", law.pmf.at(1), 3.0 / 8.0, 1e-12);
      close("cond_law_geometric_n2_j2", law.pmf.at(2), 9.0 / 32.0, 1e-12);
      close("cond_law_geometric_n2_j3", law.pmf.at(3), 21.0 / 128.0, 1e-12);
      const GfCache bcache(binary, 2);
      const auto blaw = moments::exact_conditional_law(bcache, 2, t, 64);
      close("cond_law_binary_n2_point_mass", blaw.pmf.at(2), 1.0, 1e-12);
    }

    // sampler spot checks at their stated Monte Carlo bands
    {
      Rng rng(derive_seed(seed, 0xA12));
      const GfCache cache(binary, 4);
      bool all_v1 = true;
      for (int i = 0; i < 10'000; ++i)
        if (sample_spine_step(cache, 0, rng).v != 1) all_v1 = false;
      c.checks.push_back(ge("spine_step_m0_v_always_1", all_v1 ? 1.0 : 0.0, 1.0));

      // degenerate decomposition at n = 2: binary totals are pinned at 2,
      // geometric totals hit 1 with probability 3/8
      const GfCache bin2(binary, 2);
      bool all_two = true;
      for (int i = 0; i < 100'000; ++i)
        if (simulate_geiger_decomposition(bin2, 2, 0.5, rng).z_total() != 2) all_two = false;
      c.checks.push_back(ge("decomposition_binary_n2_total_always_2", all_two ? 1.0 : 0.0, 1.0));
      const GfCache geo2(geometric, 2);
      std::int64_t ones = 0;
      const int n2_reps = 1'000'000;
      for (int i = 0; i < n2_reps; ++i)
        if (simulate_geiger_decomposition(geo2, 2, 0.5, rng).z_total() == 1) ++ones;
      c.checks.push_back(le("decomposition_geometric_n2_p1_err",
                            std::abs(static_cast<double>(ones) / n2_reps - 3.0 / 8.0),
                            0.002 * tol.mc_scale));

      // ordinary subtree: criticality over one generation; conditioned
      // subtree: forced extinction inside its horizon
      double total_count = 0.0;
      const int one_gen = 1'000'000;
      for (int i = 0; i < one_gen; ++i)
        total_count += static_cast<double>(simulate_subtree_counts(bin2, 0, 1, rng).final_count);
      c.checks.push_back(le("subtree_one_generation_mean_err",
                            std::abs(total_count / one_gen - 1.0), 0.003 * tol.mc_scale));
      bool extinct = true;
      for (int i = 0; i < 10'000; ++i)
        if (simulate_subtree_counts_tilted(bin2, 0, 1, 1, rng).final_count != 0) extinct = false;
      c.checks.push_back(ge("tilted_subtree_horizon1_extinct", extinct ? 1.0 : 0.0, 1.0));

      std::int64_t v2 = 0;
      const int draws = 1'000'000;
      for (int i = 0; i < draws; ++i)
        if (sample_spine_step(cache, 1, rng).v == 2) ++v2;
      c.checks.push_back(le("spine_step_binary_m1_v2_fraction_err",
                            std::abs(static_cast<double>(v2) / draws - 1.0 / 3.0),
                            0.002 * tol.mc_scale));

      // closed-form aggregate vs per-draw aggregate, binary, m = 20
      std::map<std::int64_t, double> fast, naive;
      const int agg_draws = 100'000;
      for (int i = 0; i < agg_draws; ++i) fast[aggregate_offspring_sum(binary, 20, rng)] += 1.0;
      for (int i = 0; i < agg_draws; ++i)
        naive[aggregate_offspring_sum_naive(binary, 20, rng)] += 1.0;
      for (auto& [k, v] : fast) v /= agg_draws;
      for (auto& [k, v] : naive) v /= agg_draws;
      c.checks.push_back(
          le("aggregate_fast_vs_naive_tv", stats::tv_distance(fast, naive), 0.01 * tol.mc_scale));

      c.checks.push_back(le("exp_characterization_ks",
                            stats::exp_characterization_check(1.0, 100'000, rng),
                            0.006 * tol.mc_scale));

      // rejection acceptance rates
      auto acceptance_rate = [&](const OffspringLaw& law, int n, int accepted_target) {
        Rng local(derive_seed(seed, 0xACC0 + n + (law.kind() == LawKind::Geometric ? 100 : 0)));
        std::int64_t attempts = 0;
        for (int i = 0; i < accepted_target; ++i) {
          for (;;) {
            ++attempts;
            GwTree tree = sample_gw_tree(law, n, local);
            if (tree.count_at_generation(n) > 0) break;
          }
        }
        return static_cast<double>(accepted_target) / static_cast<double>(attempts);
      };
      c.checks.push_back(le("rejection_rate_binary_n2_err",
                            std::abs(acceptance_rate(binary, 2, 40'000) - 3.0 / 8.0),
                            0.01 * tol.mc_scale));
      c.checks.push_back(le("rejection_rate_geometric_n3_err",
                            std::abs(acceptance_rate(geometric, 3, 40'000) - 0.25),
                            0.01 * tol.mc_scale));
    }
  });

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start).count();
  if (progress) {
    *progress << (report.all_pass() ? "ALL CRITERIA PASS" : "CRITERIA FAILED") << " ("
              << report.criteria.size() << " criterion groups, " << report.wall_seconds << "s)"
              << std::endl;
  }
  return report;
}

}  // namespace geigertree
