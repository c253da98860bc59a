// Acceptance gate: runs every criterion at the requested budget and prints
// one pass/fail line per criterion. Exit status 0 only when all pass.
#include <cstdlib>
#include <iostream>
#include <string>

#include "geigertree/experiment.hpp"
#include "geigertree/verify.hpp"

int main(int argc, char** argv) {
  using namespace geigertree;
  std::string budget = "standard";
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--budget" && i + 1 < argc)
      budget = argv[++i];
    else if (arg == "--seed" && i + 1 < argc)
      seed = std::strtoull(argv[++i], nullptr, 10);
    else if (arg == "--threads" && i + 1 < argc)
      threads = std::atoi(argv[++i]);
    else {
      std::cerr << "usage: acceptance_tests [--budget quick|standard|deep] [--seed S] "
                   "[--threads T]\n";
      return 2;
    }
  }
  try {
    const auto report = verify_suite(budget_from_name(budget), seed, threads, &std::cout);
    return report.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "acceptance suite error: " << e.what() << std::endl;
    return 1;
  }
}
