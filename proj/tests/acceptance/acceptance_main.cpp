// One line per numbered criterion; exits nonzero if any fails.

#include <iostream>

#include "blocksolve/app/checks.hpp"

int main() {
  using namespace blocksolve::app;
  int failed = 0;
  for (const auto& r : run_fixture_checks(default_fixture_dir())) {
    std::cout << format_result(r) << std::endl;
    if (!r.passed) ++failed;
  }
  for (int c = 1; c <= kCriteria; ++c) {
    CheckResult r;
    try {
      r = run_criterion(c, {});
    } catch (const std::exception& e) {
      r.id = "criterion " + std::to_string(c);
      r.title = "aborted";
      r.detail = e.what();
    }
    std::cout << format_result(r) << std::endl;
    if (!r.passed) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
