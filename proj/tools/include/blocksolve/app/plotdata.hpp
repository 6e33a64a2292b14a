#pragma once

// Seed-aggregated plot data from a finished run directory.

#include <string>
#include <vector>

namespace blocksolve::app {

inline constexpr const char* kPlotHeader = "metric,k,mean,p10,p90,rcog_ergodic_bound,arcog_envelope";

/// Reads summary.json and every per-seed trace in `run_dir` and writes
/// `out_path` (default run_dir/plotdata.csv). Returns the path written.
/// Throws std::runtime_error when the summary or a listed trace is missing.
/// The running-average metric needs every k recorded (record_every = 1).
std::string export_plotdata(const std::string& run_dir, const std::string& out_path = "");

/// Type-7 (linear interpolation) sample quantile; `values` need not be sorted.
double quantile(std::vector<double> values, double q);

}  // namespace blocksolve::app
