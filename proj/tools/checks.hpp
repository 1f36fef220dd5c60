#pragma once

#include <string>
#include <vector>

namespace doilab::checks {

struct CheckResult {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  double time_limit = 0.0;
  std::string detail;  // measured values, one line
  std::vector<std::string> notes;  // extra measurements that do not decide pass/fail
};

constexpr int kCriteria = 9;

// Runs criterion id (1..9). A criterion passes only if every check holds and
// the wall time stays below its limit. Exceptions are caught and reported as
// failures.
CheckResult run_criterion(int id);

// "[PASS] 3 multiplier suite (0.41 s < 5 s): ..." on one line.
std::string format_result(const CheckResult& r);

}  // namespace doilab::checks
