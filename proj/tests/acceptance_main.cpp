// Runs every acceptance criterion and prints one PASS/FAIL line each.
#include <cstdio>

#include "kkl/acceptance.hpp"

int main() {
  kkl::AcceptanceOptions opt;
  opt.scenario_dir = KKL_SCENARIO_DIR;
  opt.work_dir = KKL_WORK_DIR;
  int failed = 0;
  for (int id = 1; id <= kkl::kCriterionCount; ++id) {
    const kkl::CriterionResult r = kkl::run_criterion(id, opt);
    std::printf("%s\n", kkl::format_result(r).c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  std::printf("%d/%d criteria passed\n", kkl::kCriterionCount - failed, kkl::kCriterionCount);
  return failed == 0 ? 0 : 1;
}
