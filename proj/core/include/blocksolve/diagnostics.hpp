#pragma once

// Lyapunov functions, exact one-step conditional expectations by
// enumerating the sampled block, residual metrics and rate fits.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blocksolve/operator.hpp"
#include "blocksolve/solvers.hpp"

namespace blocksolve {

inline constexpr std::size_t kEnumerationCap = 64;

// ---------------------------------------------------------------- Lyapunov

struct LyapunovRcog {
  double anchor = 0.0;  // ||x^k + omega gamma G x^{k-1} - x*||^2
  double step = 0.0;    // ||x^k - x^{k-1}||_sigma^2
  double value = 0.0;
};

LyapunovRcog lyapunov_rcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                           const RcogParams& params, const Vector& solution,
                           const std::optional<WeightVector>& sigma = std::nullopt);

struct LyapunovArcog {
  double coupling = 0.0;  // 2 omega t_k eta_{k-1} [<G x^{k-1}, x^{k-1} - x*> - sum_i beta_i ||[G x^{k-1}]_i||^2]
  double momentum = 0.0;  // ||x^{k-1} - x* + t_k (x^k - x^{k-1})||^2
  double anchor = 0.0;    // ||x^{k-1} - x*||^2 (mu = 1)
  double value = 0.0;
};

LyapunovArcog lyapunov_arcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                             const ArcogSchedule& schedule, double omega,
                             const std::vector<double>& beta, const Vector& solution, long k);

// ---------------------------------------------------------------- exact expectation

/// f(x^{k+1}, x^k).
using StepFunctional = std::function<double(const Vector& next, const Vector& cur)>;
/// x^{k+1} as a function of the sampled block.
using BlockStepper = std::function<Vector(std::size_t i)>;

/// sum_i p_i f(step(i), x_cur). Throws when n exceeds `cap`.
double exact_conditional_step(const BlockStepper& step, const Vector& x_cur,
                              const BlockDistribution& dist, const StepFunctional& f,
                              std::size_t cap = kEnumerationCap);

double exact_conditional_rcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                              const RcogParams& params, const BlockDistribution& dist,
                              const StepFunctional& f, std::size_t cap = kEnumerationCap);

double exact_conditional_arcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                               const ArcogSchedule& schedule, double omega,
                               const BlockDistribution& dist, long k, const StepFunctional& f,
                               std::size_t cap = kEnumerationCap);

struct DescentMargin {
  double margin = 0.0;    // <= 0 when the descent inequality holds
  double lyapunov = 0.0;  // P_k (or P_hat_k)
  double expected_next = 0.0;
};

/// E_k[P_{k+1}] - P_k + psi ||G x^k||^2.
DescentMargin rcog_descent_margin(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                                  const RcogParams& params, const BlockDistribution& dist,
                                  const Vector& solution);

/// E_k[P_hat_{k+1}] - P_hat_k.
DescentMargin arcog_descent_margin(const Vector& x_cur, const Vector& x_prev,
                                   const BlockOperator& g, const ArcogSchedule& schedule,
                                   double omega, const std::vector<double>& beta,
                                   const BlockDistribution& dist, const Vector& solution, long k);

// ---------------------------------------------------------------- metrics

struct ResidualMetrics {
  double res_sq = 0.0;   // ||G x^k||^2
  double step_sq = 0.0;  // ||x^k - x^{k-1}||^2
  std::optional<double> dist_sq;  // ||x^k - x*||^2
};

ResidualMetrics residual_metrics(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                                 const std::optional<Vector>& solution = std::nullopt);

struct RateFit {
  long k_lo = 1;
  long k_hi = 1;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log-log fit
};

/// Least-squares line through (log k, log y[k]) for k in [k_lo, k_hi].
RateFit fit_rate_slope(const std::vector<double>& y, long k_lo, long k_hi);

/// Per-k (seed-averaged) sequences entering the summable bounds.
struct SummableInputs {
  std::vector<double> combo_sq;     // ||eta_k G x^k - gamma_k G x^{k-1}||^2
  std::vector<double> step_sq;      // ||x^k - x^{k-1}||^2
  std::vector<double> res_sq;       // ||G x^k||^2
  std::vector<double> block_diff;   // sum_i beta_bar_i ||[G x^k]_i - [G x^{k-1}]_i||^2
};

struct SummableEntry {
  std::string name;
  double partial_sum = 0.0;
  double bound = 0.0;
  bool passed = true;
};

std::vector<SummableEntry> summable_checks(const SummableInputs& in, const ArcogConstants& constants,
                                           double initial_distance_sq, double slack = 1.0);

/// Surrogate for the almost-sure statements: with z_k = (k + nu) y_k, the
/// mean over the last decile of k is below the mean over the first decile.
struct TrendSurrogate {
  double first_decile = 0.0;
  double last_decile = 0.0;
  bool decreasing = false;
};

TrendSurrogate trend_surrogate(const std::vector<double>& y, double nu);

}  // namespace blocksolve
