#pragma once

// Acceptance checks. Every check reports its worst measured margin next to
// the pinned threshold; suites group them for the `check` subcommand and
// the acceptance test binary.

#include <functional>
#include <string>
#include <vector>

namespace blocksolve::app {

struct CheckResult {
  std::string id;     // "criterion 4", "fixture:consensus_resolvent"
  std::string title;
  bool passed = false;
  std::string detail;  // measured values against thresholds
  double seconds = 0.0;
};

struct CheckOptions {
  std::string fixture_dir;  // empty: the shipped fixtures
  std::size_t threads = 0;  // 0: BLOCKSOLVE_THREADS or hardware concurrency
};

using CheckCallback = std::function<void(const CheckResult&)>;

/// Numbered acceptance criteria, 1..12.
CheckResult run_criterion(int number, const CheckOptions& opts);
inline constexpr int kCriteria = 12;

/// One result per fixture entry in lemmas.json.
std::vector<CheckResult> run_fixture_checks(const std::string& fixture_dir);

/// suite in {lemmas, solvers, federated, all}; throws std::invalid_argument otherwise.
std::vector<CheckResult> run_suite(const std::string& suite, const CheckOptions& opts,
                                   const CheckCallback& on_result = {});

std::string format_result(const CheckResult& r);

std::string default_fixture_dir();

}  // namespace blocksolve::app
