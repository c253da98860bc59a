#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace geigertree {

enum class Budget { Quick, Standard, Deep };

Budget budget_from_name(std::string_view name);
std::string budget_name(Budget budget);

struct SubCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool lower_bound = false;  // pass when value >= bound instead of <=
  bool pass = false;
  std::string detail;

  nlohmann::json to_json() const;
};

struct CriterionResult {
  std::string id;
  std::string title;
  std::vector<SubCheck> checks;
  double seconds = 0.0;

  bool pass() const;
  std::string line() const;
  nlohmann::json to_json() const;
};

struct VerifyReport {
  Budget budget = Budget::Standard;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<CriterionResult> criteria;
  double wall_seconds = 0.0;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

// Runs acceptance criteria A1..A12. Prints one pass/fail line per
// criterion to `progress` as results arrive (pass nullptr to silence).
VerifyReport verify_suite(Budget budget, std::uint64_t seed, int threads,
                          std::ostream* progress);

}  // namespace geigertree
