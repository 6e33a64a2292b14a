#pragma once

// Maximal monotone operators with closed-form or dense-solve resolvents
// J_{lambda A}(v) = (I + lambda A)^{-1} v.

#include <memory>
#include <string>
#include <variant>

#include <Eigen/LU>

#include "blocksolve/block.hpp"

namespace blocksolve {

/// A(y) = M y + b, M with PSD symmetric part.
struct AffineMap {
  Matrix m;
  Vector b;
};
/// A = mu * subdifferential of the l1 norm.
struct SoftThreshold {
  double mu = 0.0;
};
/// A = normal cone of the box [lo, hi] (componentwise, scalar bounds).
struct BoxProjection {
  double lo = 0.0;
  double hi = 0.0;
};
/// A = 0.
struct ZeroMap {};

using MonotoneOperator = std::variant<AffineMap, SoftThreshold, BoxProjection, ZeroMap>;

std::string kind_name(const MonotoneOperator& op);

/// Single-valued forward evaluation; only affine and zero kinds have one.
bool has_forward(const MonotoneOperator& op);
Vector forward(const MonotoneOperator& op, const Vector& y);

/// J_{lambda A}(v), one-shot.
Vector resolvent(const MonotoneOperator& op, double lambda, const Vector& v);

/// y solving y + lambda (M y + b) = v.
Vector resolvent_affine(const Matrix& m, const Vector& b, double lambda, const Vector& v);

/// Closed-form prox maps (soft threshold, box, zero).
Vector resolvent_prox(const MonotoneOperator& op, double lambda, const Vector& v);

/// Resolvent at a fixed scale with the affine factorization computed once.
class Resolvent {
 public:
  Resolvent() = default;
  Resolvent(MonotoneOperator op, double lambda);

  Vector operator()(const Vector& v) const;
  double scale() const { return lambda_; }
  const MonotoneOperator& op() const { return *op_; }

 private:
  std::shared_ptr<const MonotoneOperator> op_;
  double lambda_ = 0.0;
  std::shared_ptr<const Eigen::PartialPivLU<Matrix>> lu_;
};

}  // namespace blocksolve
