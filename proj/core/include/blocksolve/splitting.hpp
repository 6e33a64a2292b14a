#pragma once

// Finite-sum inclusions 0 in (1/n) sum_i A_i x + B x, lifted to the
// product space R^{np} where user i owns block i. Two operators have the
// inclusion's solutions as zeros: the forward-backward-forward operator
// S^lambda and the Douglas-Rachford operator G^beta.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "blocksolve/operator.hpp"
#include "blocksolve/resolvent.hpp"

namespace blocksolve {

struct SplitProblem {
  std::size_t dim = 0;                   // p
  std::vector<MonotoneOperator> users;   // A_1..A_n
  MonotoneOperator central = ZeroMap{};  // B
  std::optional<Vector> solution;        // x*
  std::optional<double> lipschitz;       // common L of the A_i
  double rho = 0.0;                      // star co-hypomonotonicity of the lifted problem

  std::size_t num_users() const { return users.size(); }
  /// Every A_i has a single-valued forward map.
  bool supports_fbfs() const;
  /// Declared L, or max_i ||M_i|| for affine users.
  double lipschitz_constant() const;
  void validate() const;
};

using SplitProblemPtr = std::shared_ptr<const SplitProblem>;

PartitionPtr product_partition(std::size_t n, std::size_t p);
/// [v, ..., v] (n copies).
Vector replicate(const Vector& v, std::size_t n);
/// (1/n) sum_i u_i.
Vector component_mean(const Vector& stack, std::size_t n);

struct ConsensusResult {
  Vector hat;     // u_hat
  Vector copies;  // [u_hat, ..., u_hat]
};

/// u_hat = J_{beta B}((1/n) sum_i u_i).
ConsensusResult consensus_resolvent(const Vector& u, std::size_t n, double beta,
                                    const MonotoneOperator& central);

// ---------------------------------------------------------------- FBFS

struct LambdaRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double lambda) const;
};

/// (1 - 2 rho L -/+ sqrt(1 - 8 L rho)) / (2 L (1 + L rho)); requires 8 L rho <= 1.
LambdaRange lambda_range(double lipschitz, double rho);
/// L_s = (1 + lambda L)(2 + lambda L).
double fbfs_lipschitz(double lambda, double lipschitz);
/// (1 - lambda L) / (1 + lambda L)^2 - rho / lambda.
double fbfs_rho_hat(double lambda, double lipschitz, double rho);
/// Midpoint of the admissible range.
double default_lambda(double lipschitz, double rho);

/// [S x]_i = x_i - u_hat - lambda (A_i x_i - A_i u_hat),
/// u_hat = J_{lambda B}(mean_j (x_j - lambda A_j x_j)).
/// Declares L_i = L_s, rho = 0 and the replicated solution.
class FbfsOperator final : public BlockOperator {
 public:
  FbfsOperator(SplitProblemPtr problem, double lambda);

  void apply(const Vector& x, Vector& out) const override;
  void apply_block(const Vector& x, std::size_t i, Vector& out) const override;

  /// u_hat for a product point; computed once and reused across blocks.
  Vector consensus_point(const Vector& x) const;
  /// x_i - lambda A_i x_i.
  Vector user_shift(const Eigen::Ref<const Vector>& xi, std::size_t i) const;
  /// [S x]_i given x_i and the cached u_hat.
  void block_at(const Eigen::Ref<const Vector>& xi, const Vector& uhat, std::size_t i,
                Vector& out) const;
  /// J_{lambda B}.
  Vector central_resolvent(const Vector& v) const { return jb_(v); }

  double lambda() const { return lambda_; }
  const SplitProblem& problem() const { return *problem_; }

 private:
  SplitProblemPtr problem_;
  double lambda_;
  Resolvent jb_;
};

Vector fbfs_apply(const Vector& x, double lambda, const SplitProblemPtr& problem);

struct StarReport {
  bool passed = true;
  double margin = 0.0;  // <Sx, x - x*> - rho_hat ||Sx||^2, scaled
  double rho_hat = 0.0;
};

/// <S x, x - x*> >= rho_hat ||S x||^2 - tol * scale.
StarReport fbfs_star_check(const Vector& x, double lambda, const SplitProblemPtr& problem,
                           const Vector& solution, double tol = 1e-10);

// ---------------------------------------------------------------- DRS

/// [G u]_i = (u_hat - J_{beta A_i}(2 u_hat - u_i)) / beta, u_hat = J_{beta B}(mean u).
/// beta-co-coercive on the product space; declares beta_bar_i = beta, L_i = 1/beta
/// and, for affine users, u*_i = x* - beta A_i x*.
class DrsOperator final : public BlockOperator {
 public:
  DrsOperator(SplitProblemPtr problem, double beta);

  void apply(const Vector& u, Vector& out) const override;
  void apply_block(const Vector& u, std::size_t i, Vector& out) const override;

  Vector consensus_point(const Vector& u) const;
  void block_at(const Eigen::Ref<const Vector>& ui, const Vector& uhat, std::size_t i,
                Vector& out) const;
  /// J_{beta A_i}(v).
  Vector user_resolvent(std::size_t i, const Vector& v) const { return ja_[i](v); }
  Vector central_resolvent(const Vector& v) const { return jb_(v); }

  double beta() const { return beta_; }
  const SplitProblem& problem() const { return *problem_; }

 private:
  SplitProblemPtr problem_;
  double beta_;
  Resolvent jb_;
  std::vector<Resolvent> ja_;
};

Vector drs_apply(const Vector& u, double beta, const SplitProblemPtr& problem);

/// u*_i = x* - beta A_i x* (affine or zero users only).
Vector drs_solution(const SplitProblem& problem, double beta);

// ---------------------------------------------------------------- certificates

struct SolutionCertificate {
  Vector hat;
  double residual = 0.0;
};

/// u_i = x_i - lambda v_i, u_hat = J_{lambda B}(mean u), residual = sum_i ||x_i - u_hat||^2.
SolutionCertificate solution_certificate_a(const Vector& x, const Vector& v, std::size_t n,
                                           double lambda, const MonotoneOperator& central);

/// u_hat = J_{lambda B}(mean u), residual = sum_i ||u_hat - J_{lambda A_i}(2 u_hat - u_i)||^2.
SolutionCertificate solution_certificate_b(const Vector& u, double lambda,
                                           const SplitProblem& problem);

// ---------------------------------------------------------------- generators

struct SplitInstanceOptions {
  std::size_t users = 4;
  std::size_t dim = 4;
  double skew_weight = 0.5;  // A_i = S_i/||S_i|| + skew_weight K_i/||K_i||
  bool central_affine = true;  // B affine PSD with offset placing the root at x*; else B = 0
};

/// Monotone affine users and central operator with a known solution.
SplitProblem random_split_affine(const SplitInstanceOptions& opts, std::uint64_t seed);

}  // namespace blocksolve
