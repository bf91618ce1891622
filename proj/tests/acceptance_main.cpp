#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "kflow/acceptance.hpp"

int main(int argc, char** argv) {
  kflow::AcceptanceOptions options;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--fd-dt-scale") options.fd_dt_scale = std::atof(argv[i + 1]);
    else if (flag == "--horizon") options.horizon = std::atof(argv[i + 1]);
  }
  options.on_result = [](const kflow::CriterionResult& r) {
    std::printf("%s %2d %s\n", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str());
    if (!r.passed || std::getenv("KFLOW_VERBOSE")) std::printf("    %s\n", r.detail.c_str());
    std::fflush(stdout);
  };
  const auto results = kflow::run_acceptance(options);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::printf("%zu/%zu acceptance criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
