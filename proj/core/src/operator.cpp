#include "blocksolve/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "blocksolve/errors.hpp"

namespace blocksolve {

void BlockOperator::apply_block(const Vector& x, std::size_t i, Vector& out) const {
  partition_->check_index(i);
  Vector full;
  apply(x, full);
  out = partition_->block(full, i);
}

void BlockOperator::apply_block_local(const Eigen::Ref<const Vector>&, std::size_t, Vector&) const {
  throw std::logic_error("operator is not block separable");
}

const Vector& BlockOperator::solution() const {
  if (!certs_.solution) throw CertificateUnavailable("operator has no known solution x*");
  return *certs_.solution;
}

const std::vector<double>& BlockOperator::cocoercivity() const {
  if (!certs_.cocoercivity) throw CertificateUnavailable("operator declares no co-coercivity constants");
  return *certs_.cocoercivity;
}

double max_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------

SeparableQuadraticOperator::SeparableQuadraticOperator(PartitionPtr partition,
                                                       std::vector<Matrix> blocks, Vector solution)
    : BlockOperator(std::move(partition)), blocks_(std::move(blocks)) {
  const auto& part = *partition_;
  if (blocks_.size() != part.num_blocks()) {
    throw DimensionError("expected " + std::to_string(part.num_blocks()) + " blocks, got " +
                         std::to_string(blocks_.size()));
  }
  part.check_vector(solution);
  certs_.lipschitz.resize(part.num_blocks());
  std::vector<double> beta(part.num_blocks());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Matrix& q = blocks_[i];
    const auto s = static_cast<Eigen::Index>(part.size(i));
    if (q.rows() != s || q.cols() != s) {
      throw DimensionError("block matrix " + std::to_string(i) + " has wrong shape");
    }
    const double scale = 1.0 + q.cwiseAbs().maxCoeff();
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("block matrix " + std::to_string(i) + " is not symmetric");
    }
    const double lmax = max_eigenvalue(q);
    const double lmin = min_eigenvalue(q);
    if (lmin < -1e-12 * scale) {
      throw std::invalid_argument("block matrix " + std::to_string(i) + " is not positive semidefinite");
    }
    if (!(lmax > 0.0)) {
      throw std::invalid_argument("block matrix " + std::to_string(i) + " has no positive eigenvalue");
    }
    certs_.lipschitz[i] = lmax;
    beta[i] = 1.0 / lmax;
  }
  certs_.cocoercivity = std::move(beta);
  certs_.cocoercivity_exact = true;
  certs_.weak_minty_rho = 0.0;
  certs_.solution = std::move(solution);
}

void SeparableQuadraticOperator::apply(const Vector& x, Vector& out) const {
  const auto& part = *partition_;
  part.check_vector(x);
  out.resize(x.size());
  const Vector& xs = *certs_.solution;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    part.block(out, i).noalias() = blocks_[i] * (part.block(x, i) - part.block(xs, i));
  }
}

void SeparableQuadraticOperator::apply_block(const Vector& x, std::size_t i, Vector& out) const {
  partition_->check_index(i);
  apply_block_local(partition_->block(x, i), i, out);
}

void SeparableQuadraticOperator::apply_block_local(const Eigen::Ref<const Vector>& xi,
                                                   std::size_t i, Vector& out) const {
  out.noalias() = blocks_[i] * (xi - partition_->block(*certs_.solution, i));
}

// ---------------------------------------------------------------------------

LinearOperator::LinearOperator(PartitionPtr partition, Matrix m, Vector b)
    : BlockOperator(std::move(partition)), m_(std::move(m)), b_(std::move(b)) {
  const auto p = static_cast<Eigen::Index>(partition_->dim());
  if (m_.rows() != p || m_.cols() != p) {
    throw DimensionError("matrix shape " + std::to_string(m_.rows()) + "x" +
                         std::to_string(m_.cols()) + " does not match dimension " +
                         std::to_string(p));
  }
  partition_->check_vector(b_);
  certs_.lipschitz = block_row_norms(*partition_, m_);
}

void LinearOperator::apply(const Vector& x, Vector& out) const {
  partition_->check_vector(x);
  out.noalias() = m_ * x;
  out -= b_;
}

void LinearOperator::apply_block(const Vector& x, std::size_t i, Vector& out) const {
  const auto& part = *partition_;
  part.check_index(i);
  const auto off = static_cast<Eigen::Index>(part.offset(i));
  const auto s = static_cast<Eigen::Index>(part.size(i));
  out.noalias() = m_.middleRows(off, s) * x;
  out -= b_.segment(off, s);
}

std::vector<double> block_row_norms(const BlockPartition& partition, const Matrix& m) {
  std::vector<double> out(partition.num_blocks());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = spectral_norm(m.middleRows(static_cast<Eigen::Index>(partition.offset(i)),
                                        static_cast<Eigen::Index>(partition.size(i))));
  }
  return out;
}

std::shared_ptr<SeparableQuadraticOperator> make_separable_cocoercive(
    PartitionPtr partition, std::vector<Matrix> blocks, Vector solution) {
  return std::make_shared<SeparableQuadraticOperator>(std::move(partition), std::move(blocks),
                                                      std::move(solution));
}

double weak_minty_rho(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw DimensionError("weak-Minty certificate needs a square matrix");
  const Matrix sym = m + m.transpose();
  const Matrix gram = m.transpose() * m;
  const double scale = 1.0 + sym.cwiseAbs().maxCoeff() + gram.cwiseAbs().maxCoeff();
  const double floor = -1e-12 * scale;
  auto feasible = [&](double rho) { return min_eigenvalue(sym + 2.0 * rho * gram) >= floor; };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      throw CertificateUnavailable(
          "no finite weak-Minty parameter: M^T M is singular along a direction where M + M^T is "
          "negative");
    }
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

std::shared_ptr<LinearOperator> make_linear_weak_minty(PartitionPtr partition, Matrix m,
                                                       Vector solution) {
  partition->check_vector(solution);
  const double rho = weak_minty_rho(m);
  Vector b = m * solution;
  auto g = std::make_shared<LinearOperator>(std::move(partition), std::move(m), std::move(b));
  g->mutable_certificates().weak_minty_rho = rho;
  g->mutable_certificates().solution = std::move(solution);
  return g;
}

CheckReport check_weak_minty(const BlockOperator& g, double rho, const std::vector<Vector>& points,
                             double tol) {
  const auto& cert = g.certificates();
  if (!cert.solution) throw std::invalid_argument("weak-Minty check needs a known solution x*");
  const Vector& xs = *cert.solution;
  CheckReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  Vector gx;
  for (std::size_t t = 0; t < points.size(); ++t) {
    g.apply(points[t], gx);
    const double margin = gx.dot(points[t] - xs) + rho * gx.squaredNorm();
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_index = t;
    }
    if (margin < -tol) rep.passed = false;
  }
  rep.trials = points.size();
  if (points.empty()) rep.worst_margin = 0.0;
  return rep;
}

namespace {

Vector gaussian(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> nd;
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = nd(rng);
  return v;
}

}  // namespace

CheckReport check_block_lipschitz(const BlockOperator& g, std::size_t trials, std::uint64_t seed,
                                  double rel_tol) {
  const auto& part = g.partition();
  const auto& lip = g.certificates().lipschitz;
  if (lip.size() != part.num_blocks()) throw CertificateUnavailable("operator declares no Lipschitz constants");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, part.num_blocks() - 1);
  CheckReport rep;
  rep.worst_margin = -std::numeric_limits<double>::infinity();
  Vector gx, gy;
  const auto p = static_cast<Eigen::Index>(part.dim());
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t i = pick(rng);
    Vector x = gaussian(rng, p);
    Vector y = x;
    part.block(y, i) += gaussian(rng, static_cast<Eigen::Index>(part.size(i)));
    g.apply_block(x, i, gx);
    g.apply_block(y, i, gy);
    const double lhs = (gx - gy).norm();
    const double rhs = lip[i] * (part.block(x, i) - part.block(y, i)).norm();
    const double margin = rhs > 0.0 ? lhs / rhs - 1.0 : (lhs > 0.0 ? 1.0 : -1.0);
    if (margin > rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_index = t;
    }
    if (lhs > rhs * (1.0 + rel_tol)) rep.passed = false;
  }
  rep.trials = trials;
  return rep;
}

CheckReport check_block_cocoercive(const BlockOperator& g, const std::vector<double>& beta,
                                   std::size_t trials, std::uint64_t seed, double tol) {
  const auto& part = g.partition();
  if (beta.size() != part.num_blocks()) throw DimensionError("one co-coercivity constant per block expected");
  std::mt19937_64 rng(seed);
  CheckReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  Vector gx, gy;
  const auto p = static_cast<Eigen::Index>(part.dim());
  for (std::size_t t = 0; t < trials; ++t) {
    Vector x = gaussian(rng, p);
    Vector y = gaussian(rng, p);
    g.apply(x, gx);
    g.apply(y, gy);
    for (std::size_t i = 0; i < part.num_blocks(); ++i) {
      const Vector dg = part.block(gx, i) - part.block(gy, i);
      const Vector dx = part.block(x, i) - part.block(y, i);
      const double scale = 1.0 + dx.squaredNorm() + dg.squaredNorm();
      const double margin = (dg.dot(dx) - beta[i] * dg.squaredNorm()) / scale;
      if (margin < rep.worst_margin) {
        rep.worst_margin = margin;
        rep.worst_index = t;
      }
      if (margin < -tol) rep.passed = false;
    }
  }
  rep.trials = trials;
  return rep;
}

}  // namespace blocksolve
