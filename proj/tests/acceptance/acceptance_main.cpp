// Runs the oracle-backed acceptance suite and prints one line per criterion.
//
//   miprobe_acceptance [--quick] [--seed N]
//
// Exit status is 0 only if every criterion passes.

#include <cstdio>
#include <cstring>
#include <string>

#include "miprobe/cli/validation.hpp"
#include "miprobe/parallel.hpp"

int main(int argc, char** argv) {
  miprobe::cli::ValidationOptions options;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      options.quick = true;
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      options.seed = std::stoull(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--quick] [--seed N]\n", argv[0]);
      return 2;
    }
  }

  const auto report = miprobe::cli::cmd_synth_validate(options, miprobe::thread_budget());
  const auto& checks = report.summary.at("checks");
  int failed = 0;
  std::printf("acceptance (%s scale, seed %llu)\n", options.quick ? "quick" : "full",
              static_cast<unsigned long long>(options.seed));
  for (const auto& c : checks) {
    const bool ok = c.at("passed").get<bool>();
    failed += ok ? 0 : 1;
    auto observed = c.at("observed");
    observed.erase("cases");
    observed.erase("curve");
    std::printf("criterion %2d %s  %-22s %s\n", c.at("id").get<int>(), ok ? "PASS" : "FAIL",
                c.at("name").get<std::string>().c_str(), observed.dump().c_str());
  }
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(checks.size()) - failed, checks.size(),
              report.wall_clock_seconds);
  return failed == 0 ? 0 : 1;
}
