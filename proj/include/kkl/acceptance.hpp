#ifndef KKL_ACCEPTANCE_HPP_
#define KKL_ACCEPTANCE_HPP_

#include <string>
#include <vector>

#include "kkl/kernels.hpp"

namespace kkl {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // measured values against their thresholds
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::string scenario_dir;  // scenarios replayed by the determinism check
  std::string work_dir;      // scratch space for artifacts
  kernels::Exec exec = kernels::Exec::parallel;
};

inline constexpr int kCriterionCount = 9;

/// Runs one criterion (1..9). Exceptions are reported as failures.
CriterionResult run_criterion(int id, const AcceptanceOptions& options);

/// Runs the listed criteria (all when empty) in order.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::vector<int>& ids = {});

/// "PASS  3 edf-residual  max 2.1e-05 <= 1e-03  (4.2 s)"
std::string format_result(const CriterionResult& r);

}  // namespace kkl

#endif  // KKL_ACCEPTANCE_HPP_
