#include "blocksolve/instances.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/QR>

#include "blocksolve/errors.hpp"

namespace blocksolve {

Spectrum spectrum_from_string(const std::string& name) {
  if (name == "uniform") return Spectrum::Uniform;
  if (name == "singular") return Spectrum::Singular;
  if (name == "wide") return Spectrum::Wide;
  throw std::invalid_argument("unknown spectrum '" + name + "' (expected uniform, singular or wide)");
}

std::string to_string(Spectrum s) {
  switch (s) {
    case Spectrum::Uniform: return "uniform";
    case Spectrum::Singular: return "singular";
    case Spectrum::Wide: return "wide";
  }
  return "uniform";
}

Vector gaussian_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& a : v) a = nd(rng);
  return v;
}

Matrix gaussian_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> nd;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = nd(rng);
  return m;
}

Matrix random_orthogonal(std::mt19937_64& rng, std::size_t n) {
  const Matrix a = gaussian_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  // Sign-fix with diag(R) so the distribution is Haar.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

Matrix random_psd(std::mt19937_64& rng, std::size_t n, Spectrum spectrum) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector eig(static_cast<Eigen::Index>(n));
  for (auto& e : eig) {
    switch (spectrum) {
      case Spectrum::Uniform: e = 0.1 + 0.9 * unif(rng); break;
      case Spectrum::Singular: e = unif(rng); break;
      case Spectrum::Wide: e = std::pow(10.0, -3.0 * unif(rng)); break;
    }
  }
  eig[0] = 1.0;
  if (spectrum == Spectrum::Singular && n > 1) eig[static_cast<Eigen::Index>(n) - 1] = 0.0;
  const Matrix u = random_orthogonal(rng, n);
  Matrix q = u * eig.asDiagonal() * u.transpose();
  return 0.5 * (q + q.transpose());
}

std::shared_ptr<SeparableQuadraticOperator> random_separable_cocoercive(
    std::size_t num_blocks, std::size_t block_size, std::uint64_t seed, Spectrum spectrum) {
  std::mt19937_64 rng(seed);
  auto part = std::make_shared<const BlockPartition>(BlockPartition::uniform(num_blocks, block_size));
  std::vector<Matrix> blocks;
  blocks.reserve(num_blocks);
  for (std::size_t i = 0; i < num_blocks; ++i) blocks.push_back(random_psd(rng, block_size, spectrum));
  Vector xs = gaussian_vector(rng, part->dim());
  return make_separable_cocoercive(part, std::move(blocks), std::move(xs));
}

std::shared_ptr<LinearOperator> random_monotone_linear(std::size_t num_blocks,
                                                       std::size_t block_size, std::uint64_t seed,
                                                       double skew_weight) {
  std::mt19937_64 rng(seed);
  auto part = std::make_shared<const BlockPartition>(BlockPartition::uniform(num_blocks, block_size));
  const std::size_t p = part->dim();
  const Matrix b = gaussian_matrix(rng, p, p);
  const Matrix c = gaussian_matrix(rng, p, p);
  Matrix s = b * b.transpose();
  s /= spectral_norm(s);
  Matrix k = c - c.transpose();
  k /= spectral_norm(k);
  Matrix m = s + skew_weight * k;
  m /= spectral_norm(m);
  Vector xs = gaussian_vector(rng, p);
  return make_linear_weak_minty(part, std::move(m), std::move(xs));
}

std::shared_ptr<LinearOperator> random_weak_minty_linear(std::size_t num_blocks,
                                                         std::size_t block_size,
                                                         std::uint64_t seed, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("rho must be nonnegative");
  auto part = std::make_shared<const BlockPartition>(BlockPartition::uniform(num_blocks, block_size));
  const std::size_t p = part->dim();
  if (p % 2 != 0) throw DimensionError("weak-Minty generator needs an even total dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  // A 2x2 block a*[[cos f, sin f], [-sin f, cos f]] has weak-Minty parameter
  // max(0, -cos f / a).
  for (std::size_t j = 0; j < p / 2; ++j) {
    const double a = 0.5 + 0.5 * unif(rng);
    double cosf;
    if (j == 0) {
      cosf = -rho * a;
    } else {
      cosf = -rho * a + (1.0 + rho * a) * unif(rng);
    }
    cosf = std::clamp(cosf, -1.0, 1.0);
    const double sinf = std::sqrt(1.0 - cosf * cosf);
    const auto r = static_cast<Eigen::Index>(2 * j);
    d(r, r) = a * cosf;
    d(r, r + 1) = a * sinf;
    d(r + 1, r) = -a * sinf;
    d(r + 1, r + 1) = a * cosf;
  }
  const Matrix u = random_orthogonal(rng, p);
  Matrix m = u * d * u.transpose();
  Vector xs = gaussian_vector(rng, p);
  return make_linear_weak_minty(part, std::move(m), std::move(xs));
}

}  // namespace blocksolve
