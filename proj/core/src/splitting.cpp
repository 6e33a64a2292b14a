#include "blocksolve/splitting.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "blocksolve/errors.hpp"
#include "blocksolve/instances.hpp"

namespace blocksolve {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::size_t checked_users(const Vector& stack, std::size_t n) {
  if (n == 0) throw DimensionError("need at least one user");
  if (stack.size() % static_cast<Eigen::Index>(n) != 0) {
    throw DimensionError("product vector length " + std::to_string(stack.size()) +
                         " is not a multiple of the user count " + std::to_string(n));
  }
  return static_cast<std::size_t>(stack.size()) / n;
}

auto seg(const Vector& v, std::size_t i, std::size_t p) {
  return v.segment(static_cast<Eigen::Index>(i * p), static_cast<Eigen::Index>(p));
}
auto seg(Vector& v, std::size_t i, std::size_t p) {
  return v.segment(static_cast<Eigen::Index>(i * p), static_cast<Eigen::Index>(p));
}

}  // namespace

// ---------------------------------------------------------------- problem

bool SplitProblem::supports_fbfs() const {
  for (const auto& a : users)
    if (!has_forward(a)) return false;
  return true;
}

double SplitProblem::lipschitz_constant() const {
  if (lipschitz) return *lipschitz;
  double l = 0.0;
  for (const auto& a : users) {
    if (const auto* af = std::get_if<AffineMap>(&a)) {
      l = std::max(l, spectral_norm(af->m));
    } else if (!std::holds_alternative<ZeroMap>(a)) {
      throw CertificateUnavailable("no Lipschitz constant for user operator of kind " + kind_name(a));
    }
  }
  return l;
}

void SplitProblem::validate() const {
  if (users.empty()) throw DimensionError("split problem needs at least one user");
  if (dim == 0) throw DimensionError("split problem dimension must be positive");
  auto check = [&](const MonotoneOperator& op, const std::string& who) {
    if (const auto* af = std::get_if<AffineMap>(&op)) {
      if (af->m.rows() != static_cast<Eigen::Index>(dim) || af->m.cols() != static_cast<Eigen::Index>(dim) ||
          af->b.size() != static_cast<Eigen::Index>(dim)) {
        throw DimensionError(who + " affine operator does not match dimension " + std::to_string(dim));
      }
    }
  };
  for (std::size_t i = 0; i < users.size(); ++i) check(users[i], "user " + std::to_string(i));
  check(central, "central");
  if (solution && solution->size() != static_cast<Eigen::Index>(dim)) {
    throw DimensionError("solution length does not match dimension");
  }
}

PartitionPtr product_partition(std::size_t n, std::size_t p) {
  return std::make_shared<const BlockPartition>(BlockPartition::uniform(n, p));
}

Vector replicate(const Vector& v, std::size_t n) { return v.replicate(static_cast<Eigen::Index>(n), 1); }

Vector component_mean(const Vector& stack, std::size_t n) {
  const std::size_t p = checked_users(stack, n);
  Vector m = Vector::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) m += seg(stack, i, p);
  return m / static_cast<double>(n);
}

ConsensusResult consensus_resolvent(const Vector& u, std::size_t n, double beta,
                                    const MonotoneOperator& central) {
  if (!(beta > 0.0)) throw std::invalid_argument("consensus resolvent scale must be positive");
  ConsensusResult r;
  r.hat = resolvent(central, beta, component_mean(u, n));
  r.copies = replicate(r.hat, n);
  return r;
}

// ---------------------------------------------------------------- FBFS

bool LambdaRange::contains(double lambda) const {
  if (!(lambda > 0.0)) return false;
  return lambda >= lo && lambda <= hi;
}

LambdaRange lambda_range(double l, double rho) {
  if (!(l > 0.0)) throw InfeasibleParameters("Lipschitz constant must be positive");
  if (!(rho >= 0.0)) throw InfeasibleParameters("rho must be nonnegative");
  const double disc = 1.0 - 8.0 * l * rho;
  if (disc < 0.0) {
    throw InfeasibleParameters("condition 8 L rho <= 1 violated: 8 L rho = " + fmt(8.0 * l * rho));
  }
  const double s = std::sqrt(disc);
  const double den = 2.0 * l * (1.0 + l * rho);
  return {(1.0 - 2.0 * rho * l - s) / den, (1.0 - 2.0 * rho * l + s) / den};
}

double fbfs_lipschitz(double lambda, double l) { return (1.0 + lambda * l) * (2.0 + lambda * l); }

double fbfs_rho_hat(double lambda, double l, double rho) {
  const double a = 1.0 + lambda * l;
  return (1.0 - lambda * l) / (a * a) - rho / lambda;
}

double default_lambda(double l, double rho) {
  const LambdaRange r = lambda_range(l, rho);
  return 0.5 * (r.lo + r.hi);
}

FbfsOperator::FbfsOperator(SplitProblemPtr problem, double lambda)
    : BlockOperator(product_partition(problem->num_users(), problem->dim)),
      problem_(std::move(problem)),
      lambda_(lambda) {
  problem_->validate();
  if (!problem_->supports_fbfs()) {
    throw std::invalid_argument("forward-backward-forward operator needs single-valued user operators");
  }
  const double l = problem_->lipschitz_constant();
  if (l > 0.0) {
    const LambdaRange r = lambda_range(l, problem_->rho);
    if (!r.contains(lambda)) {
      throw InfeasibleParameters("lambda = " + fmt(lambda) + " outside the admissible range [" + fmt(r.lo) + ", " +
                                 fmt(r.hi) + "]" + (r.lo <= 0.0 ? " (open at 0)" : ""));
    }
  } else if (!(lambda > 0.0)) {
    throw InfeasibleParameters("lambda must be positive");
  }
  jb_ = Resolvent(problem_->central, lambda_);
  certs_.lipschitz.assign(num_blocks(), fbfs_lipschitz(lambda_, l));
  certs_.weak_minty_rho = 0.0;
  if (problem_->solution) certs_.solution = replicate(*problem_->solution, num_blocks());
}

Vector FbfsOperator::user_shift(const Eigen::Ref<const Vector>& xi, std::size_t i) const {
  const Vector x = xi;
  return x - lambda_ * forward(problem_->users[i], x);
}

Vector FbfsOperator::consensus_point(const Vector& x) const {
  partition_->check_vector(x);
  const std::size_t n = num_blocks();
  const std::size_t p = problem_->dim;
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) mean += user_shift(seg(x, i, p), i);
  mean /= static_cast<double>(n);
  return jb_(mean);
}

void FbfsOperator::block_at(const Eigen::Ref<const Vector>& xi, const Vector& uhat, std::size_t i,
                            Vector& out) const {
  const Vector x = xi;
  const auto& a = problem_->users[i];
  out = x - uhat - lambda_ * (forward(a, x) - forward(a, uhat));
}

void FbfsOperator::apply(const Vector& x, Vector& out) const {
  const Vector uhat = consensus_point(x);
  const std::size_t p = problem_->dim;
  out.resize(x.size());
  Vector blk;
  for (std::size_t i = 0; i < num_blocks(); ++i) {
    block_at(seg(x, i, p), uhat, i, blk);
    seg(out, i, p) = blk;
  }
}

void FbfsOperator::apply_block(const Vector& x, std::size_t i, Vector& out) const {
  partition_->check_index(i);
  const Vector uhat = consensus_point(x);
  block_at(seg(x, i, problem_->dim), uhat, i, out);
}

Vector fbfs_apply(const Vector& x, double lambda, const SplitProblemPtr& problem) {
  return FbfsOperator(problem, lambda)(x);
}

StarReport fbfs_star_check(const Vector& x, double lambda, const SplitProblemPtr& problem,
                           const Vector& solution, double tol) {
  const double l = problem->lipschitz_constant();
  const LambdaRange r = lambda_range(l, problem->rho);
  if (!r.contains(lambda)) {
    throw std::invalid_argument("star check requires lambda inside the admissible range");
  }
  FbfsOperator s(problem, lambda);
  const Vector sx = s(x);
  const Vector xs = replicate(solution, problem->num_users());
  StarReport rep;
  rep.rho_hat = fbfs_rho_hat(lambda, l, problem->rho);
  const double scale = 1.0 + (x - xs).squaredNorm() + sx.squaredNorm();
  rep.margin = (sx.dot(x - xs) - rep.rho_hat * sx.squaredNorm()) / scale;
  rep.passed = rep.margin >= -tol;
  return rep;
}

// ---------------------------------------------------------------- DRS

DrsOperator::DrsOperator(SplitProblemPtr problem, double beta)
    : BlockOperator(product_partition(problem->num_users(), problem->dim)),
      problem_(std::move(problem)),
      beta_(beta) {
  problem_->validate();
  if (!(beta > 0.0)) throw InfeasibleParameters("DRS scale beta must be positive (got " + fmt(beta) + ")");
  jb_ = Resolvent(problem_->central, beta_);
  ja_.reserve(num_blocks());
  for (const auto& a : problem_->users) ja_.emplace_back(a, beta_);
  certs_.lipschitz.assign(num_blocks(), 1.0 / beta_);
  certs_.cocoercivity = std::vector<double>(num_blocks(), beta_);
  certs_.cocoercivity_exact = false;
  certs_.weak_minty_rho = 0.0;
  if (problem_->solution && problem_->supports_fbfs()) certs_.solution = drs_solution(*problem_, beta_);
}

Vector DrsOperator::consensus_point(const Vector& u) const {
  partition_->check_vector(u);
  return jb_(component_mean(u, num_blocks()));
}

void DrsOperator::block_at(const Eigen::Ref<const Vector>& ui, const Vector& uhat, std::size_t i,
                           Vector& out) const {
  const Vector arg = 2.0 * uhat - ui;
  out = (uhat - ja_[i](arg)) / beta_;
}

void DrsOperator::apply(const Vector& u, Vector& out) const {
  const Vector uhat = consensus_point(u);
  const std::size_t p = problem_->dim;
  out.resize(u.size());
  Vector blk;
  for (std::size_t i = 0; i < num_blocks(); ++i) {
    block_at(seg(u, i, p), uhat, i, blk);
    seg(out, i, p) = blk;
  }
}

void DrsOperator::apply_block(const Vector& u, std::size_t i, Vector& out) const {
  partition_->check_index(i);
  const Vector uhat = consensus_point(u);
  block_at(seg(u, i, problem_->dim), uhat, i, out);
}

Vector drs_apply(const Vector& u, double beta, const SplitProblemPtr& problem) {
  return DrsOperator(problem, beta)(u);
}

Vector drs_solution(const SplitProblem& problem, double beta) {
  if (!problem.solution) throw CertificateUnavailable("split problem has no known solution");
  const std::size_t n = problem.num_users();
  const std::size_t p = problem.dim;
  const Vector& xs = *problem.solution;
  Vector u(static_cast<Eigen::Index>(n * p));
  for (std::size_t i = 0; i < n; ++i) seg(u, i, p) = xs - beta * forward(problem.users[i], xs);
  return u;
}

// ---------------------------------------------------------------- certificates

SolutionCertificate solution_certificate_a(const Vector& x, const Vector& v, std::size_t n,
                                           double lambda, const MonotoneOperator& central) {
  const std::size_t p = checked_users(x, n);
  if (v.size() != x.size()) throw DimensionError("graph pairs must have matching lengths");
  const Vector u = x - lambda * v;
  SolutionCertificate c;
  c.hat = resolvent(central, lambda, component_mean(u, n));
  for (std::size_t i = 0; i < n; ++i) c.residual += (seg(x, i, p) - c.hat).squaredNorm();
  return c;
}

SolutionCertificate solution_certificate_b(const Vector& u, double lambda,
                                           const SplitProblem& problem) {
  const std::size_t n = problem.num_users();
  const std::size_t p = checked_users(u, n);
  SolutionCertificate c;
  c.hat = resolvent(problem.central, lambda, component_mean(u, n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vector arg = 2.0 * c.hat - seg(u, i, p);
    c.residual += (c.hat - resolvent(problem.users[i], lambda, arg)).squaredNorm();
  }
  return c;
}

// ---------------------------------------------------------------- generators

SplitProblem random_split_affine(const SplitInstanceOptions& opts, std::uint64_t seed) {
  if (opts.users == 0 || opts.dim == 0) throw DimensionError("split instance needs users and dimension");
  std::mt19937_64 rng(seed);
  const std::size_t p = opts.dim;
  SplitProblem prob;
  prob.dim = p;
  Vector xs = gaussian_vector(rng, p);
  Vector user_sum = Vector::Zero(static_cast<Eigen::Index>(p));
  double l = 0.0;
  for (std::size_t i = 0; i < opts.users; ++i) {
    const Matrix b = gaussian_matrix(rng, p, p);
    Matrix s = b * b.transpose();
    s /= spectral_norm(s);
    Matrix m = s;
    if (p > 1 && opts.skew_weight != 0.0) {
      const Matrix c = gaussian_matrix(rng, p, p);
      Matrix k = c - c.transpose();
      m += opts.skew_weight * k / spectral_norm(k);
    }
    // Offsets chosen so user i alone is not solved by x*.
    Vector off = gaussian_vector(rng, p) - m * xs;
    user_sum += m * xs + off;
    l = std::max(l, spectral_norm(m));
    prob.users.emplace_back(AffineMap{std::move(m), std::move(off)});
  }
  const Vector user_mean = user_sum / static_cast<double>(opts.users);
  if (opts.central_affine) {
    Matrix q = random_psd(rng, p, Spectrum::Uniform);
    Vector bb = -(q * xs) - user_mean;
    prob.central = AffineMap{std::move(q), std::move(bb)};
  } else {
    // Shift the last user so the mean residual vanishes at x*.
    auto& last = std::get<AffineMap>(prob.users.back());
    last.b -= static_cast<double>(opts.users) * user_mean;
    prob.central = ZeroMap{};
  }
  prob.solution = std::move(xs);
  prob.lipschitz = l;
  prob.rho = 0.0;
  return prob;
}

}  // namespace blocksolve
