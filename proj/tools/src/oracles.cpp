#include "blocksolve/app/oracles.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

namespace blocksolve::app {

Vector brute_force_consensus(const Vector& u, std::size_t n, double beta, const Matrix& q, const Vector& b) {
  const auto p = q.rows();
  const auto np = static_cast<Eigen::Index>(n) * p;
  // Unknowns: [u~_1..u~_n, s~_1..s~_n].
  Matrix a = Matrix::Zero(2 * np, 2 * np);
  Vector rhs = Vector::Zero(2 * np);
  const Matrix eye = Matrix::Identity(p, p);
  const double nd = static_cast<double>(n);
  // n beta (Q u~_1 + b) + beta s~_1 + u~_1 = u_1
  a.block(0, 0, p, p) = nd * beta * q + eye;
  a.block(0, np, p, p) = beta * eye;
  rhs.segment(0, p) = u.segment(0, p) - nd * beta * b;
  // beta s~_i + u~_i = u_i
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
    a.block(i * p, i * p, p, p) = eye;
    a.block(i * p, np + i * p, p, p) = beta * eye;
    rhs.segment(i * p, p) = u.segment(i * p, p);
  }
  // u~_i - u~_1 = 0
  for (Eigen::Index i = 1; i < static_cast<Eigen::Index>(n); ++i) {
    a.block(np + (i - 1) * p, i * p, p, p) = eye;
    a.block(np + (i - 1) * p, 0, p, p) = -eye;
  }
  // sum_i s~_i = 0
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) a.block(2 * np - p, np + i * p, p, p) = eye;
  const Vector sol = a.fullPivLu().solve(rhs);
  return sol.segment(0, p);
}

Vector brute_force_affine_resolvent(const Matrix& m, const Vector& b, double lambda, const Vector& v) {
  const Matrix a = Matrix::Identity(m.rows(), m.cols()) + lambda * m;
  return a.householderQr().solve(v - lambda * b);
}

}  // namespace blocksolve::app
