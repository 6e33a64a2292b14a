#pragma once

// Randomized block-coordinate optimistic gradient kernels: the
// non-accelerated scheme (RCOG), the accelerated scheme (ARCOG) in its
// direct form, and the memory-light z/w form of ARCOG.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "blocksolve/block.hpp"
#include "blocksolve/operator.hpp"

namespace blocksolve {

// ---------------------------------------------------------------- RCOG

struct RcogParams {
  double omega = 1.0;
  double gamma = 0.0;
  double eta = 0.0;
  double rho = 0.0;
  double rho_bar = 0.0;
  double psi = 0.0;
};

/// rho_bar = min_i sqrt(p_i) / (2 L_i); gamma = ([rho]_+ + rho_bar) / (2 omega);
/// eta = gamma + (omega gamma - rho) p_min / (4 omega). Throws
/// InfeasibleParameters when |rho| >= rho_bar.
RcogParams derive_rcog_params(double omega, double rho, const std::vector<double>& lipschitz,
                              const BlockDistribution& dist);

/// psi = 2 omega (eta - gamma)(omega gamma - rho - 2 omega (eta - gamma) / p_min).
double rcog_psi(const RcogParams& params, double p_min);

/// Throws InfeasibleParameters naming the first violated stepsize condition.
void validate_rcog_params(const RcogParams& params, const BlockDistribution& dist);

/// x_cur with block i replaced by x_cur_i - (omega/p_i)(eta [G x_cur]_i - gamma [G x_prev]_i).
Vector rcog_step(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                 const RcogParams& params, const BlockDistribution& dist, std::size_t i);

// ---------------------------------------------------------------- ARCOG schedule

struct ArcogCoefficients {
  double theta = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
};

struct ArcogStep {
  double t = 0.0;       // t_k
  double t_next = 0.0;  // t_{k+1}
  double theta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  ArcogCoefficients coefficients() const { return {theta, eta, gamma}; }
};

/// t_k = (k + 2 nu + 1) / nu, theta_k = gamma_k = (t_k - 2) / t_{k+1},
/// eta_k = (t_k - 1) / t_{k+1}; valid for k >= -1.
class ArcogSchedule {
 public:
  explicit ArcogSchedule(double nu);

  double nu() const { return nu_; }
  double t(long k) const { return (static_cast<double>(k) + 2.0 * nu_ + 1.0) / nu_; }
  ArcogStep at(long k) const;

  /// Residual of the general schedule conditions at k with mu = 1:
  /// returns the worst violation (<= tol means they hold).
  double lemma_condition_violation(long k) const;

 private:
  double nu_;
};

/// x_cur + theta (x_cur - x_prev) - (omega/p_i)(eta [G x_cur]_i - gamma [G x_prev]_i) e_i.
Vector arcog_step_direct(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                         const ArcogCoefficients& coef, double omega,
                         const BlockDistribution& dist, std::size_t i);
Vector arcog_step_direct(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                         const ArcogSchedule& schedule, double omega,
                         const BlockDistribution& dist, std::size_t i, long k);

// ---------------------------------------------------------------- ARCOG constants

struct ArcogConstants {
  double lambda0_bar = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double nu = 0.0;
  double omega = 0.0;

  /// 8 (C0 + 2 omega C2) / (omega^2 (k + nu)^2), to be multiplied by ||x0 - x*||^2.
  double envelope(long k) const;
};

ArcogConstants arcog_constants(double nu, double omega, const std::vector<double>& beta,
                               const std::vector<double>& beta_bar, const BlockDistribution& dist);

/// beta_i = fraction * beta_bar_i.
std::vector<double> default_beta(const std::vector<double>& beta_bar, double fraction = 0.9);
/// omega = min_i beta_i p_i, half of the admissible ceiling.
double default_arcog_omega(const std::vector<double>& beta, const BlockDistribution& dist);

// ---------------------------------------------------------------- practical ARCOG

/// x^k = z^k + c_k w^k. Only the block touched by the last step differs
/// between (z^k, w^k) and (z^{k-1}, w^{k-1}); its old values are stashed.
///
/// tau_k decays like k^-(2 nu + 1) and w grows like 1/tau_k, so the raw
/// split cancels catastrophically after a few hundred steps. Whenever tau
/// drops below `rebase_threshold` the representation is rebased exactly:
/// z <- z + C w, w <- T w, c <- (c - C) / T, tau <- tau / T with C = c_k,
/// T = tau_k. A threshold of 0 disables rebasing.
struct PracticalState {
  Vector z;
  Vector w;
  long k = 0;
  double tau = 1.0;
  double c = 0.0;
  double c_prev = 0.0;
  std::optional<std::size_t> stashed_block;
  std::size_t stash_offset = 0;
  Vector z_stash;
  Vector w_stash;
  double rebase_threshold = 1e-4;
  std::size_t rebases = 0;

  static PracticalState start(const Vector& x0, double rebase_threshold = 1e-4);
};

inline constexpr double kTauFloor = 1e-250;

/// Advances the state by one step on block i (k must equal state.k).
PracticalState arcog_step_practical(const PracticalState& state, const BlockOperator& g,
                                    const ArcogSchedule& schedule, double omega,
                                    const BlockDistribution& dist, std::size_t i, long k);
void arcog_advance_practical(PracticalState& state, const BlockOperator& g,
                             const ArcogSchedule& schedule, double omega,
                             const BlockDistribution& dist, std::size_t i);

/// z + c w.
Vector reconstruct_iterate(const PracticalState& state);
/// z^{k-1} + c_{k-1} w^{k-1}.
Vector reconstruct_previous(const PracticalState& state);

/// Applies the exact rebase with the current (c, tau).
void rebase(PracticalState& state);

// ---------------------------------------------------------------- stateful solvers

enum class SolverKind { Rcog, ArcogDirect, ArcogPractical };

/// One run's iterate pair and step count behind a uniform interface.
class Solver {
 public:
  virtual ~Solver() = default;
  virtual void step(std::size_t i) = 0;
  virtual Vector current() const = 0;
  virtual Vector previous() const = 0;
  long iteration() const { return k_; }

 protected:
  long k_ = 0;
};

class RcogSolver final : public Solver {
 public:
  RcogSolver(OperatorPtr g, RcogParams params, BlockDistribution dist, const Vector& x0);
  void step(std::size_t i) override;
  Vector current() const override { return x_; }
  Vector previous() const override;

 private:
  OperatorPtr g_;
  RcogParams params_;
  BlockDistribution dist_;
  Vector x_;
  std::optional<std::size_t> stashed_block_;
  Vector stash_;
  Vector g_cur_, g_prev_;
};

class ArcogDirectSolver final : public Solver {
 public:
  ArcogDirectSolver(OperatorPtr g, ArcogSchedule schedule, double omega, BlockDistribution dist,
                    const Vector& x0);
  void step(std::size_t i) override;
  Vector current() const override { return x_; }
  Vector previous() const override { return x_prev_; }

 private:
  OperatorPtr g_;
  ArcogSchedule schedule_;
  double omega_;
  BlockDistribution dist_;
  Vector x_, x_prev_;
};

class ArcogPracticalSolver final : public Solver {
 public:
  ArcogPracticalSolver(OperatorPtr g, ArcogSchedule schedule, double omega,
                       BlockDistribution dist, const Vector& x0, double rebase_threshold = 1e-4);
  void step(std::size_t i) override;
  Vector current() const override { return reconstruct_iterate(state_); }
  Vector previous() const override { return reconstruct_previous(state_); }
  const PracticalState& state() const { return state_; }

 private:
  OperatorPtr g_;
  ArcogSchedule schedule_;
  double omega_;
  BlockDistribution dist_;
  PracticalState state_;
};

}  // namespace blocksolve
