#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geigertree/experiment.hpp"
#include "geigertree/limits.hpp"
#include "geigertree/moments.hpp"
#include "geigertree/verify.hpp"

namespace {

using namespace geigertree;

int run_simulate(const ExperimentConfig& config) {
  const ResultTable table = run_experiment(config);
  std::cout << table.summary_json().dump(2) << std::endl;
  return 0;
}

struct LimitsArgs {
  std::string cdf = "limit-sum";
  double t = 0.5;
  double sigma2 = 1.0;
  int k = 1, k_l = 1, k_r = 1;
  double a = 0.0, b = 1.0;
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  int points = 101;
  std::vector<double> at;
  std::string out_csv;
};

int run_limits(const LimitsArgs& args) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.out_csv.empty()) {
    file.open(args.out_csv, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open CSV output '" + args.out_csv + "'");
    out = &file;
  }

  auto evaluate = [&](double x) -> double {
    if (args.cdf == "limit-sum")
      return limits::limit_sum_cdf(limits::LimitSpec::make(args.t, args.sigma2), x);
    if (args.cdf == "left-split") return limits::split_limit_cdf(Side::Left, args.k, args.t, x);
    if (args.cdf == "right-split") return limits::split_limit_cdf(Side::Right, args.k, args.t, x);
    if (args.cdf == "mrca") return limits::mrca_limit_cdf(args.t, x);
    if (args.cdf == "nested-uniform") return limits::nested_uniform_cdf(args.k, x, args.a, args.b);
    if (args.cdf == "g-transform") return limits::g_transform(args.t, x);
    if (args.cdf == "l-tail") return limits::l_limit_tail(args.t, args.sigma2, x);
    throw CLI::ValidationError("--cdf", "unknown cdf '" + args.cdf + "'");
  };

  // Default grids per cdf domain.
  double lo = args.min, hi = args.max;
  if ((std::isnan(lo) || std::isnan(hi)) && args.at.empty()) {
    if (args.cdf == "limit-sum" || args.cdf == "l-tail") {
      lo = 0.0;
      hi = 2.0 * args.t * args.sigma2;
    } else if (args.cdf == "nested-uniform") {
      lo = args.a;
      hi = args.b;
    } else if (args.cdf == "g-transform") {
      lo = 0.0;
      hi = 1.0;
    } else {
      lo = 0.0;
      hi = args.t;
    }
  }

  if (args.cdf == "joint-split") {
    *out << "x,y,cdf\n";
    const double step_x = args.t / (args.points - 1);
    for (int i = 0; i < args.points; ++i)
      for (int j = 0; j < args.points; ++j) {
        const double x = i * step_x, y = j * step_x;
        *out << x << ',' << y << ','
             << limits::joint_split_limit_cdf(args.k_l, args.k_r, args.t, x, y) << '\n';
      }
    return 0;
  }

  *out << "x,cdf\n";
  if (!args.at.empty()) {
    for (double x : args.at) *out << x << ',' << evaluate(x) << '\n';
  } else {
    if (args.points < 2) throw CLI::ValidationError("--points", "need at least 2 grid points");
    const double step = (hi - lo) / (args.points - 1);
    for (int i = 0; i < args.points; ++i) {
      const double x = lo + i * step;
      *out << x << ',' << evaluate(x) << '\n';
    }
  }
  if (!*out) throw std::runtime_error("failed while writing CSV output");
  return 0;
}

int run_moments(const std::string& law, const std::vector<double>& params, int n, double t,
                const std::string& out_json) {
  const OffspringLaw offspring = OffspringLaw::from_name(law, params);
  const GfCache cache(offspring, static_cast<std::size_t>(n));
  const auto rep = moments::moment_report(cache, n, t);
  nlohmann::json j{{"law", law},
                   {"n", rep.n},
                   {"t", rep.t},
                   {"nt", rep.nt},
                   {"sigma2", rep.sigma2},
                   {"a_nt", rep.a_nt},
                   {"c_nt", rep.c_nt},
                   {"b_nt", rep.b_nt},
                   {"d_n", rep.d_n},
                   {"second_left", rep.second_left},
                   {"second_right", rep.second_right},
                   {"second_l", rep.second_l},
                   {"i_n1", rep.i_n1},
                   {"i_n2", rep.i_n2},
                   {"i_n3", rep.i_n3},
                   {"targets",
                    {{"a_over_n", rep.target_a},
                     {"c_over_n", rep.target_c},
                     {"b_over_n", rep.target_b},
                     {"second_left_over_n2", rep.target_second_left},
                     {"second_right_over_n2", rep.target_second_right},
                     {"second_l_over_n2", rep.target_second_l}}},
                   {"relative_errors",
                    {{"a", rep.rel_err_a},
                     {"c", rep.rel_err_c},
                     {"b", rep.rel_err_b},
                     {"second_left", rep.rel_err_second_left},
                     {"second_right", rep.rel_err_second_right},
                     {"second_l", rep.rel_err_second_l}}},
                   {"version", version_string()}};
  if (!out_json.empty()) {
    std::ofstream out(out_json, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open JSON output '" + out_json + "'");
    out << j.dump(2) << '\n';
  }
  std::cout << j.dump(2) << std::endl;
  return 0;
}

int run_verify(const std::string& budget, std::uint64_t seed, int threads,
               const std::string& out_json) {
  const VerifyReport report = verify_suite(budget_from_name(budget), seed, threads, &std::cout);
  if (!out_json.empty()) {
    std::ofstream out(out_json, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open JSON output '" + out_json + "'");
    out << report.to_json().dump(2) << '\n';
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditioned Galton-Watson tree simulator and limit-law verifier"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run replicated decompositions, emit CSV/JSON");
  std::string config_path;
  ExperimentConfig config;
  std::string mode_name = "counts-only";
  bool law_set = false, n_set = false, t_set = false, reps_set = false, seed_set = false,
       maxk_set = false, threads_set = false;
  std::vector<double> params;
  std::string out_csv, out_json;
  sim->add_option("--config", config_path, "JSON config file; flags override its fields");
  auto* law_opt = sim->add_option("--law", config.law, "binary | geometric | poisson | custom");
  auto* param_opt = sim->add_option("--param", params, "pmf entries for --law custom");
  auto* n_opt = sim->add_option("--n", config.n, "survival horizon n");
  auto* t_opt = sim->add_option("--t", config.t, "observation fraction t in (0,1)");
  auto* reps_opt = sim->add_option("--reps", config.replicates, "number of replicates");
  auto* seed_opt = sim->add_option("--seed", config.seed, "master seed");
  auto* maxk_opt = sim->add_option("--max-k", config.max_k, "split times recorded per side");
  auto* mode_opt = sim->add_option("--mode", mode_name, "counts-only | full-tree-oracle");
  auto* csv_opt = sim->add_option("--out-csv", out_csv, "per-replicate CSV path");
  auto* json_opt = sim->add_option("--out-json", out_json, "summary JSON path");
  auto* thr_opt = sim->add_option("--threads", config.threads, "worker threads (0 = auto)");

  // limits
  auto* lim = app.add_subcommand("limits", "evaluate closed-form limit CDFs on a grid (CSV)");
  LimitsArgs largs;
  lim->add_option("--cdf", largs.cdf,
                  "limit-sum | left-split | right-split | joint-split | mrca | "
                  "nested-uniform | g-transform | l-tail");
  lim->add_option("--t", largs.t, "observation fraction");
  lim->add_option("--sigma2", largs.sigma2, "offspring variance");
  lim->add_option("--k", largs.k, "split depth / nested index");
  lim->add_option("--kl", largs.k_l, "left split depth (joint-split)");
  lim->add_option("--kr", largs.k_r, "right split depth (joint-split)");
  lim->add_option("--a", largs.a, "nested-uniform lower endpoint");
  lim->add_option("--b", largs.b, "nested-uniform upper endpoint");
  lim->add_option("--min", largs.min, "grid start (defaults to the cdf domain)");
  lim->add_option("--max", largs.max, "grid end");
  lim->add_option("--points", largs.points, "grid size");
  lim->add_option("--at", largs.at, "explicit evaluation points (repeatable)");
  lim->add_option("--out-csv", largs.out_csv, "CSV path (default stdout)");

  // moments
  auto* mom = app.add_subcommand("moments", "exact moment report as JSON");
  std::string mlaw = "geometric";
  std::vector<double> mparams;
  int mn = 100000;
  double mt = 0.5;
  std::string mout;
  mom->add_option("--law", mlaw, "binary | geometric | poisson | custom");
  mom->add_option("--param", mparams, "pmf entries for --law custom");
  mom->add_option("--n", mn, "horizon n");
  mom->add_option("--t", mt, "observation fraction");
  mom->add_option("--out-json", mout, "JSON path (also printed)");

  // verify
  auto* ver = app.add_subcommand("verify", "run the acceptance criteria");
  std::string budget = "standard";
  std::uint64_t vseed = kDefaultSeed;
  int vthreads = 0;
  std::string vout;
  ver->add_option("--budget", budget, "quick | standard | deep");
  ver->add_option("--seed", vseed, "master seed");
  ver->add_option("--threads", vthreads, "worker threads (0 = auto)");
  ver->add_option("--out-json", vout, "machine-readable report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) {
      law_set = law_opt->count() > 0;
      n_set = n_opt->count() > 0;
      t_set = t_opt->count() > 0;
      reps_set = reps_opt->count() > 0;
      seed_set = seed_opt->count() > 0;
      maxk_set = maxk_opt->count() > 0;
      threads_set = thr_opt->count() > 0;
      ExperimentConfig final_config;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config file '" + config_path + "'");
        nlohmann::json j;
        in >> j;
        final_config = ExperimentConfig::from_json(j);
      }
      if (law_set) final_config.law = config.law;
      if (param_opt->count() > 0) final_config.params = params;
      if (n_set) final_config.n = config.n;
      if (t_set) final_config.t = config.t;
      if (reps_set) final_config.replicates = config.replicates;
      if (seed_set) final_config.seed = config.seed;
      if (maxk_set) final_config.max_k = config.max_k;
      if (mode_opt->count() > 0) {
        if (mode_name == "counts-only")
          final_config.mode = ExperimentConfig::Mode::CountsOnly;
        else if (mode_name == "full-tree-oracle")
          final_config.mode = ExperimentConfig::Mode::FullTreeOracle;
        else
          throw CLI::ValidationError("--mode", "expected counts-only or full-tree-oracle");
      }
      if (csv_opt->count() > 0) final_config.out_csv = out_csv;
      if (json_opt->count() > 0) final_config.out_json = out_json;
      if (threads_set) final_config.threads = config.threads;
      return run_simulate(final_config);
    }
    if (lim->parsed()) return run_limits(largs);
    if (mom->parsed()) return run_moments(mlaw, mparams, mn, mt, mout);
    if (ver->parsed()) return run_verify(budget, vseed, vthreads, vout);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}
