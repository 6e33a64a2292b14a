#pragma once

// Run configuration: one JSON document naming the problem, the solver and
// its parameters, the seeds and what to record.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blocksolve::app {

/// Parse or validation failure, positioned in the source text when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, std::size_t line = 0, std::size_t column = 0);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct DiagnosticsToggles {
  bool lyapunov = true;
  bool descent_margins = false;
  bool summable_checks = false;
  bool operator==(const DiagnosticsToggles&) const = default;
};

struct RunConfig {
  // Exactly one of the two is set. problem_inline holds canonical JSON.
  std::optional<std::string> problem_file;
  std::optional<std::string> problem_inline;

  std::string solver = "rcog";  // rcog, arcog_direct, arcog_practical, fedog, acfeddr
  std::optional<double> omega;
  std::optional<double> rho;
  double nu = 4.0;
  double beta_fraction = 0.9;     // beta_i = fraction * beta_bar_i for ARCOG
  std::optional<double> lambda;   // FedOG
  std::optional<double> beta;     // AcFedDR
  double rebase_threshold = 1e-4;
  std::optional<std::vector<double>> probs;
  std::optional<std::vector<double>> x0;

  std::vector<std::uint64_t> seeds{0};
  long max_iters = 1000;
  double tol = 0.0;  // stop once ||G x^k||^2 <= tol; 0 runs the full budget
  long record_every = 1;
  DiagnosticsToggles diagnostics;
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;

  bool federated() const { return solver == "fedog" || solver == "acfeddr"; }
};

/// Relative problem_file and output_dir paths are kept as written;
/// resolve them with resolve_path against the config's directory.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON (sorted keys, all fields present).
std::string serialize_run_config(const RunConfig& cfg);

/// FNV-1a over the canonical config with the problem text substituted for
/// its path and output_dir left out, as 16 hex digits.
std::string config_hash(const RunConfig& cfg, const std::string& problem_text);

std::string resolve_path(const std::string& base_dir, const std::string& path);

/// "line:col" from a byte offset, both 1-based.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset);

}  // namespace blocksolve::app
