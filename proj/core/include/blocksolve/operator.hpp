#pragma once

// Block operators G : R^p -> R^p evaluated whole or one block at a time,
// together with the regularity constants they claim.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blocksolve/block.hpp"

namespace blocksolve {

struct Certificates {
  std::vector<double> lipschitz;                     // L_i
  std::optional<std::vector<double>> cocoercivity;   // beta_bar_i
  bool cocoercivity_exact = false;                   // true only for separable constructions
  std::optional<double> weak_minty_rho;              // rho
  std::optional<Vector> solution;                    // x*
};

class BlockOperator {
 public:
  explicit BlockOperator(PartitionPtr partition) : partition_(std::move(partition)) {}
  virtual ~BlockOperator() = default;

  const BlockPartition& partition() const { return *partition_; }
  const PartitionPtr& partition_ptr() const { return partition_; }
  std::size_t num_blocks() const { return partition_->num_blocks(); }
  std::size_t dim() const { return partition_->dim(); }

  /// out = G(x).
  virtual void apply(const Vector& x, Vector& out) const = 0;

  /// out = [G(x)]_i. The default evaluates G fully; subclasses override with
  /// a cheaper block evaluation.
  virtual void apply_block(const Vector& x, std::size_t i, Vector& out) const;

  /// True when [Gx]_i depends on x_i only.
  virtual bool separable() const { return false; }

  /// For separable operators: out = [G(x)]_i computed from x_i alone.
  virtual void apply_block_local(const Eigen::Ref<const Vector>& xi, std::size_t i,
                                 Vector& out) const;

  Vector operator()(const Vector& x) const {
    Vector out;
    apply(x, out);
    return out;
  }
  Vector block(const Vector& x, std::size_t i) const {
    Vector out;
    apply_block(x, i, out);
    return out;
  }

  const Certificates& certificates() const { return certs_; }
  Certificates& mutable_certificates() { return certs_; }

  const Vector& solution() const;  // throws CertificateUnavailable
  const std::vector<double>& cocoercivity() const;  // throws CertificateUnavailable

 protected:
  PartitionPtr partition_;
  Certificates certs_;
};

using OperatorPtr = std::shared_ptr<const BlockOperator>;

/// [Gx]_i = Q_i (x_i - x*_i) with symmetric PSD Q_i.
class SeparableQuadraticOperator final : public BlockOperator {
 public:
  SeparableQuadraticOperator(PartitionPtr partition, std::vector<Matrix> blocks, Vector solution);

  void apply(const Vector& x, Vector& out) const override;
  void apply_block(const Vector& x, std::size_t i, Vector& out) const override;
  bool separable() const override { return true; }
  void apply_block_local(const Eigen::Ref<const Vector>& xi, std::size_t i,
                         Vector& out) const override;

  const std::vector<Matrix>& blocks() const { return blocks_; }

 private:
  std::vector<Matrix> blocks_;
};

/// G(x) = M x - b.
class LinearOperator final : public BlockOperator {
 public:
  LinearOperator(PartitionPtr partition, Matrix m, Vector b);

  void apply(const Vector& x, Vector& out) const override;
  void apply_block(const Vector& x, std::size_t i, Vector& out) const override;

  const Matrix& matrix() const { return m_; }
  const Vector& offset() const { return b_; }

 private:
  Matrix m_;
  Vector b_;
};

std::shared_ptr<SeparableQuadraticOperator> make_separable_cocoercive(
    PartitionPtr partition, std::vector<Matrix> blocks, Vector solution);

/// G(x) = M(x - x*) with per-block-row spectral norms as L_i and the
/// smallest rho with M + M^T + 2 rho M^T M PSD.
std::shared_ptr<LinearOperator> make_linear_weak_minty(PartitionPtr partition, Matrix m,
                                                       Vector solution);

/// Smallest rho >= 0 with M + M^T + 2 rho M^T M PSD, by bisection to `tol`.
/// Returns the feasible end of the final bracket.
double weak_minty_rho(const Matrix& m, double tol = 1e-8);

/// Spectral norm of each block row of M.
std::vector<double> block_row_norms(const BlockPartition& partition, const Matrix& m);

struct CheckReport {
  bool passed = true;
  double worst_margin = 0.0;
  std::size_t worst_index = 0;
  std::size_t trials = 0;
};

/// <Gx, x - x*> + rho ||Gx||^2 >= -tol at every trial point.
CheckReport check_weak_minty(const BlockOperator& g, double rho, const std::vector<Vector>& points,
                             double tol = 1e-10);

/// [Gx]_i - [Gy]_i <= L_i ||x_i - y_i|| on `trials` random pairs that differ
/// only in one block. Margin reported is the worst ratio / L_i - 1.
CheckReport check_block_lipschitz(const BlockOperator& g, std::size_t trials, std::uint64_t seed,
                                  double rel_tol = 1e-10);

/// sum_i <[Gx-Gy]_i, x_i-y_i> - beta_i ||[Gx-Gy]_i||^2 >= -tol*scale, per block,
/// on random pairs. Margin is the worst scaled slack.
CheckReport check_block_cocoercive(const BlockOperator& g, const std::vector<double>& beta,
                                   std::size_t trials, std::uint64_t seed, double tol = 1e-10);

/// Largest eigenvalue of a symmetric matrix.
double max_eigenvalue(const Matrix& sym);
/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& sym);
double spectral_norm(const Matrix& m);

}  // namespace blocksolve
