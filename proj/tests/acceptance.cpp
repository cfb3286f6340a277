// Acceptance runner: executes every criterion of the verification battery at
// full scale and prints one pass/fail line per criterion. Exit code 0 iff
// everything passed.

#include <cstring>
#include <iostream>
#include <string>
#include <thread>

#include "gglab/suite.hpp"

int main(int argc, char** argv) {
  gglab::SuiteOptions opts;
  opts.workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      opts.quick = true;
    } else if (arg == "--timing") {
      opts.timing = true;
    } else if (arg == "--seed" && i + 1 < argc) {
      opts.seed = std::stoull(argv[++i]);
    } else if (arg == "--workers" && i + 1 < argc) {
      opts.workers = static_cast<std::uint32_t>(std::stoul(argv[++i]));
    } else {
      std::cerr << "usage: gglab_acceptance [--quick] [--timing] [--seed S] [--workers W]\n";
      return 2;
    }
  }
  const gglab::SuiteResult result = gglab::run_suite(opts);
  gglab::print_outcomes(result, std::cout);
  return result.all_pass() ? 0 : 1;
}
