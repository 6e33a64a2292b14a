#include "blocksolve/resolvent.hpp"

#include <cmath>
#include <stdexcept>

#include "blocksolve/errors.hpp"

namespace blocksolve {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_affine(const AffineMap& a) {
  if (a.m.rows() != a.m.cols() || a.m.rows() != a.b.size()) {
    throw DimensionError("affine operator has inconsistent matrix/offset shapes");
  }
}

Vector solve_checked(const Eigen::PartialPivLU<Matrix>& lu, const Matrix& system, const Vector& rhs) {
  Vector y = lu.solve(rhs);
  const double res = (system * y - rhs).norm();
  if (!std::isfinite(res) || res > 1e-10 * (1.0 + rhs.norm()) * (1.0 + system.cwiseAbs().maxCoeff())) {
    throw std::runtime_error("resolvent system is singular to working precision");
  }
  return y;
}

}  // namespace

std::string kind_name(const MonotoneOperator& op) {
  return std::visit(overloaded{[](const AffineMap&) { return std::string("affine"); },
                               [](const SoftThreshold&) { return std::string("soft_threshold"); },
                               [](const BoxProjection&) { return std::string("box"); },
                               [](const ZeroMap&) { return std::string("zero"); }},
                    op);
}

bool has_forward(const MonotoneOperator& op) {
  return std::holds_alternative<AffineMap>(op) || std::holds_alternative<ZeroMap>(op);
}

Vector forward(const MonotoneOperator& op, const Vector& y) {
  if (const auto* a = std::get_if<AffineMap>(&op)) {
    Vector out = a->m * y;
    out += a->b;
    return out;
  }
  if (std::holds_alternative<ZeroMap>(op)) return Vector::Zero(y.size());
  throw std::invalid_argument("operator kind '" + kind_name(op) + "' has no single-valued forward map");
}

Vector resolvent_affine(const Matrix& m, const Vector& b, double lambda, const Vector& v) {
  check_affine(AffineMap{m, b});
  if (v.size() != b.size()) throw DimensionError("resolvent input has wrong length");
  if (lambda == 0.0) return v;
  const Matrix system = Matrix::Identity(m.rows(), m.cols()) + lambda * m;
  Eigen::PartialPivLU<Matrix> lu(system);
  return solve_checked(lu, system, v - lambda * b);
}

Vector resolvent_prox(const MonotoneOperator& op, double lambda, const Vector& v) {
  return std::visit(
      overloaded{
          [&](const SoftThreshold& s) -> Vector {
            const double t = lambda * s.mu;
            return v.unaryExpr([t](double a) {
              return std::copysign(std::max(std::abs(a) - t, 0.0), a);
            });
          },
          [&](const BoxProjection& bx) -> Vector {
            if (bx.lo > bx.hi) throw std::invalid_argument("box bounds must satisfy lo <= hi");
            return v.cwiseMax(bx.lo).cwiseMin(bx.hi);
          },
          [&](const ZeroMap&) -> Vector { return v; },
          [&](const AffineMap& a) -> Vector { return resolvent_affine(a.m, a.b, lambda, v); }},
      op);
}

Vector resolvent(const MonotoneOperator& op, double lambda, const Vector& v) {
  return resolvent_prox(op, lambda, v);
}

Resolvent::Resolvent(MonotoneOperator op, double lambda)
    : op_(std::make_shared<const MonotoneOperator>(std::move(op))), lambda_(lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("resolvent scale must be nonnegative");
  if (const auto* a = std::get_if<AffineMap>(op_.get())) {
    check_affine(*a);
    lu_ = std::make_shared<const Eigen::PartialPivLU<Matrix>>(
        Matrix::Identity(a->m.rows(), a->m.cols()) + lambda * a->m);
  }
  if (const auto* bx = std::get_if<BoxProjection>(op_.get()); bx && bx->lo > bx->hi) {
    throw std::invalid_argument("box bounds must satisfy lo <= hi");
  }
}

Vector Resolvent::operator()(const Vector& v) const {
  if (!op_) return v;
  if (const auto* a = std::get_if<AffineMap>(op_.get())) {
    if (v.size() != a->b.size()) throw DimensionError("resolvent input has wrong length");
    return lu_->solve(v - lambda_ * a->b);
  }
  return resolvent_prox(*op_, lambda_, v);
}

}  // namespace blocksolve
