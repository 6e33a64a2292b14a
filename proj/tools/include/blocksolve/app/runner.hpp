#pragma once

// Executes a RunConfig: one trace per seed (run in parallel across seeds,
// single-threaded within a run) plus a summary document.

#include <cstddef>
#include <string>
#include <vector>

#include "blocksolve/app/config.hpp"

namespace blocksolve::app {

inline constexpr const char* kTraceHeader = "k,block,res_sq,step_sq,dist_sq,lyapunov,margin";
inline constexpr const char* kFederatedHeader = "round,sampled_user,certificate_residual,lyapunov,cumulative_bytes";

struct RunResult {
  std::string config_hash;
  std::string output_dir;
  std::string summary_path;
  std::vector<std::string> traces;
  bool bounds_satisfied = true;  // every theoretical bound reported in the summary holds
  std::string summary_json;
};

/// Worker count for `jobs` independent runs: `requested` if positive, else
/// BLOCKSOLVE_THREADS if set, else the hardware concurrency.
std::size_t worker_count(std::size_t requested, std::size_t jobs);

/// `config_dir` anchors a relative problem_file. Parameters are validated
/// for every seed before any run starts.
RunResult run_experiment(const RunConfig& cfg, const std::string& config_dir, std::size_t threads = 0);

/// Fixed-width round-trip formatting used for every number written to CSV.
std::string format_number(double v);

}  // namespace blocksolve::app
