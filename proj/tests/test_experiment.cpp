#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <stdexcept>

#include "doctest.h"

#include "geigertree/experiment.hpp"

using namespace geigertree;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempPath {
  std::string path;
  explicit TempPath(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.law = "binary";
  c.n = 2000;
  CHECK_NOTHROW(c.validate());

  auto broken = c;
  broken.t = 1.0;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  broken = c;
  broken.n = 1;
  broken.t = 0.4;  // floor(0.4) = 0
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  broken = c;
  broken.replicates = 0;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  broken = c;
  broken.max_k = 9;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  broken = c;
  broken.mode = ExperimentConfig::Mode::FullTreeOracle;
  broken.n = 13;
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
  broken = c;
  broken.law = "cauchy";
  CHECK_THROWS_AS(broken.validate(), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  ExperimentConfig c;
  c.law = "custom";
  c.params = {0.25, 0.5, 0.25};
  c.n = 64;
  c.t = 0.25;
  c.replicates = 7;
  c.seed = 99;
  c.max_k = 2;
  c.mode = ExperimentConfig::Mode::FullTreeOracle;
  c.threads = 3;
  const auto j = c.to_json();
  const auto back = ExperimentConfig::from_json(j);
  CHECK(back.law == c.law);
  CHECK(back.params == c.params);
  CHECK(back.n == c.n);
  CHECK(back.t == c.t);
  CHECK(back.replicates == c.replicates);
  CHECK(back.seed == c.seed);
  CHECK(back.max_k == c.max_k);
  CHECK(back.mode == c.mode);
  CHECK(back.threads == c.threads);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"mode", "bogus"}}), std::invalid_argument);
}

TEST_CASE("csv output is deterministic and carries the pinned header") {
  TempPath csv1("geigertree_test_a.csv"), csv2("geigertree_test_b.csv");
  ExperimentConfig c;
  c.law = "geometric";
  c.n = 50;
  c.t = 0.5;
  c.replicates = 400;
  c.seed = 31415;
  c.out_csv = csv1.path;
  c.threads = 1;
  const auto table1 = run_experiment(c);
  c.out_csv = csv2.path;
  c.threads = 4;
  const auto table2 = run_experiment(c);

  const std::string a = slurp(csv1.path), b = slurp(csv2.path);
  CHECK(a == b);  // thread count does not change the bytes
  CHECK(a.substr(0, a.find('\n')) ==
        "rep,z_left,z_right,z_total,g_l_1,g_l_2,g_l_3,g_l_4,g_r_1,g_r_2,g_r_3,g_r_4,"
        "d_l_1,d_l_2,d_l_3,d_l_4,d_r_1,d_r_2,d_r_3,d_r_4,mrca");
  CHECK(table1.csv_header() ==
        "rep,z_left,z_right,z_total,g_l_1,g_l_2,g_l_3,g_l_4,g_r_1,g_r_2,g_r_3,g_r_4,"
        "d_l_1,d_l_2,d_l_3,d_l_4,d_r_1,d_r_2,d_r_3,d_r_4,mrca");

  // rerun with the same seed: byte-identical
  c.out_csv = csv1.path;
  c.threads = 2;
  run_experiment(c);
  CHECK(slurp(csv1.path) == b);

  // every row satisfies the partition identity
  for (const auto& row : table2.rows) CHECK(row.z_total() == row.z_left + row.z_right - 1);
}

TEST_CASE("degenerate n = 2 binary run") {
  ExperimentConfig c;
  c.law = "binary";
  c.n = 2;
  c.t = 0.5;
  c.replicates = 100'000;
  c.seed = 7;
  const auto table = run_experiment(c);
  for (const auto& row : table.rows) CHECK(row.z_total() == 2);
}

TEST_CASE("single replicate flags insufficient tests") {
  ExperimentConfig c;
  c.law = "binary";
  c.n = 20;
  c.t = 0.5;
  c.replicates = 1;
  const auto table = run_experiment(c);
  CHECK(table.rows.size() == 1);
  bool any_skipped = false;
  for (const auto& t : table.tests) {
    if (t.skipped) {
      any_skipped = true;
      CHECK(t.note.find("insufficient") != std::string::npos);
    }
  }
  CHECK(any_skipped);
  const auto j = table.summary_json();
  CHECK(j.contains("note"));
}

TEST_CASE("summary json carries config echo, version, wall time and tests") {
  TempPath json_path("geigertree_test.json");
  ExperimentConfig c;
  c.law = "binary";
  c.n = 40;
  c.t = 0.5;
  c.replicates = 2000;
  c.out_json = json_path.path;
  const auto table = run_experiment(c);
  const auto j = nlohmann::json::parse(slurp(json_path.path));
  CHECK(j.at("config").at("law") == "binary");
  CHECK(j.at("config").at("seed").get<std::uint64_t>() == kDefaultSeed);
  CHECK(j.at("version").get<std::string>().find("geigertree") == 0);
  CHECK(j.at("wall_time_seconds").get<double>() >= 0.0);
  CHECK(j.at("nt").get<int>() == 20);
  CHECK(j.at("tests").is_array());
  CHECK(j.at("tests").size() == table.tests.size());
  for (const auto& t : j.at("tests")) {
    CHECK(t.contains("name"));
    if (!t.contains("skipped")) {
      CHECK(t.contains("value"));
      CHECK(t.contains("tolerance"));
      CHECK(t.contains("pass"));
    }
  }
}

TEST_CASE("full-tree-oracle mode matches counts-only in law at small n") {
  ExperimentConfig c;
  c.law = "geometric";
  c.n = 6;
  c.t = 0.5;
  c.replicates = 30'000;
  c.seed = 5;
  c.mode = ExperimentConfig::Mode::FullTreeOracle;
  const auto oracle = run_experiment(c);
  c.mode = ExperimentConfig::Mode::CountsOnly;
  const auto fast = run_experiment(c);

  auto mean_total = [](const ResultTable& t) {
    double s = 0.0;
    for (const auto& r : t.rows) s += static_cast<double>(r.z_total());
    return s / static_cast<double>(t.rows.size());
  };
  CHECK(std::abs(mean_total(oracle) - mean_total(fast)) < 0.15);
  for (const auto& row : oracle.rows) CHECK(row.z_total() >= 1);
}

}  // TEST_SUITE
