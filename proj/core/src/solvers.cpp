#include "blocksolve/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "blocksolve/errors.hpp"

namespace blocksolve {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_distribution(const BlockOperator& g, const BlockDistribution& dist) {
  if (dist.size() != g.num_blocks()) {
    throw DimensionError("distribution has " + std::to_string(dist.size()) + " blocks, operator has " +
                         std::to_string(g.num_blocks()));
  }
}

}  // namespace

// ---------------------------------------------------------------- RCOG

double rcog_psi(const RcogParams& prm, double p_min) {
  const double d = prm.eta - prm.gamma;
  return 2.0 * prm.omega * d * (prm.omega * prm.gamma - prm.rho - 2.0 * prm.omega * d / p_min);
}

RcogParams derive_rcog_params(double omega, double rho, const std::vector<double>& lipschitz,
                              const BlockDistribution& dist) {
  if (!(omega > 0.0)) throw InfeasibleParameters("omega must be positive (got " + fmt(omega) + ")");
  if (lipschitz.size() != dist.size()) throw DimensionError("one Lipschitz constant per block expected");
  double rho_bar = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lipschitz.size(); ++i) {
    if (!(lipschitz[i] >= 0.0)) throw InfeasibleParameters("Lipschitz constants must be nonnegative");
    if (lipschitz[i] > 0.0) rho_bar = std::min(rho_bar, std::sqrt(dist.prob(i)) / (2.0 * lipschitz[i]));
  }
  if (!std::isfinite(rho_bar)) {
    throw InfeasibleParameters("all Lipschitz constants are zero; stepsize ceiling rho_bar is unbounded");
  }
  if (!(std::abs(rho) < rho_bar)) {
    throw InfeasibleParameters("weak-Minty parameter violates |rho| < rho_bar = min_i sqrt(p_i)/(2 L_i): |rho| = " +
                               fmt(std::abs(rho)) + ", rho_bar = " + fmt(rho_bar));
  }
  RcogParams prm;
  prm.omega = omega;
  prm.rho = rho;
  prm.rho_bar = rho_bar;
  prm.gamma = (std::max(rho, 0.0) + rho_bar) / (2.0 * omega);
  prm.eta = prm.gamma + (omega * prm.gamma - rho) * dist.p_min() / (4.0 * omega);
  prm.psi = rcog_psi(prm, dist.p_min());
  validate_rcog_params(prm, dist);
  return prm;
}

void validate_rcog_params(const RcogParams& prm, const BlockDistribution& dist) {
  const double w = prm.omega;
  if (!(w > 0.0)) throw InfeasibleParameters("omega must be positive");
  if (!(std::max(prm.rho, 0.0) / w < prm.gamma)) {
    throw InfeasibleParameters("stepsize condition [rho]_+/omega < gamma violated: gamma = " + fmt(prm.gamma));
  }
  if (prm.rho_bar > 0.0 && !(prm.gamma <= prm.rho_bar / w * (1.0 + 1e-15))) {
    throw InfeasibleParameters("stepsize condition gamma <= rho_bar/omega violated: gamma = " + fmt(prm.gamma) +
                               ", rho_bar/omega = " + fmt(prm.rho_bar / w));
  }
  const double eta_hi = prm.gamma + (w * prm.gamma - prm.rho) * dist.p_min() / (2.0 * w);
  if (!(prm.gamma < prm.eta && prm.eta < eta_hi)) {
    throw InfeasibleParameters("stepsize condition gamma < eta < gamma + (omega gamma - rho) p_min/(2 omega) violated: eta = " +
                               fmt(prm.eta) + ", upper limit = " + fmt(eta_hi));
  }
  if (!(rcog_psi(prm, dist.p_min()) > 0.0)) {
    throw InfeasibleParameters("descent coefficient psi is not positive");
  }
}

Vector rcog_step(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                 const RcogParams& prm, const BlockDistribution& dist, std::size_t i) {
  const auto& part = g.partition();
  part.check_index(i);
  check_distribution(g, dist);
  Vector g_cur, g_prev;
  g.apply_block(x_cur, i, g_cur);
  g.apply_block(x_prev, i, g_prev);
  Vector out = x_cur;
  part.block(out, i) -= (prm.omega / dist.prob(i)) * (prm.eta * g_cur - prm.gamma * g_prev);
  return out;
}

// ---------------------------------------------------------------- ARCOG schedule

ArcogSchedule::ArcogSchedule(double nu) : nu_(nu) {
  if (!(nu > 3.0)) {
    throw InfeasibleParameters("schedule parameter must satisfy nu > 3 (got " + fmt(nu) +
                               "); the summable constant C1 diverges otherwise");
  }
}

ArcogStep ArcogSchedule::at(long k) const {
  if (k < -1) throw std::invalid_argument("schedule is defined for k >= -1");
  ArcogStep s;
  s.t = t(k);
  s.t_next = t(k + 1);
  s.theta = (s.t - 2.0) / s.t_next;
  s.gamma = s.theta;
  s.eta = (s.t - 1.0) / s.t_next;
  return s;
}

double ArcogSchedule::lemma_condition_violation(long k) const {
  const double mu = 1.0;
  const ArcogStep s = at(k);
  const ArcogStep sp = at(k - 1);
  double v = std::abs(s.theta - (s.t - mu - 1.0) / s.t_next);
  v = std::max(v, std::abs(s.gamma - s.t_next * s.theta * s.eta / (s.t_next * s.theta + 1.0)));
  const double lhs = s.t * sp.eta;
  const double rhs = (1.0 - 1.0 / (s.t - mu)) * s.t_next * s.eta;
  v = std::max(v, rhs - lhs);
  return std::max(v, 0.0);
}

Vector arcog_step_direct(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                         const ArcogCoefficients& coef, double omega,
                         const BlockDistribution& dist, std::size_t i) {
  const auto& part = g.partition();
  part.check_index(i);
  check_distribution(g, dist);
  Vector g_cur, g_prev;
  g.apply_block(x_cur, i, g_cur);
  g.apply_block(x_prev, i, g_prev);
  Vector out = x_cur + coef.theta * (x_cur - x_prev);
  part.block(out, i) -= (omega / dist.prob(i)) * (coef.eta * g_cur - coef.gamma * g_prev);
  return out;
}

Vector arcog_step_direct(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                         const ArcogSchedule& schedule, double omega,
                         const BlockDistribution& dist, std::size_t i, long k) {
  return arcog_step_direct(x_cur, x_prev, g, schedule.at(k).coefficients(), omega, dist, i);
}

// ---------------------------------------------------------------- ARCOG constants

double ArcogConstants::envelope(long k) const {
  const double d = omega * (static_cast<double>(k) + nu);
  return 8.0 * (c0 + 2.0 * omega * c2) / (d * d);
}

ArcogConstants arcog_constants(double nu, double omega, const std::vector<double>& beta,
                               const std::vector<double>& beta_bar, const BlockDistribution& dist) {
  if (!(nu > 3.0)) throw InfeasibleParameters("schedule parameter must satisfy nu > 3 (got " + fmt(nu) + ")");
  const std::size_t n = dist.size();
  if (beta.size() != n || beta_bar.size() != n) throw DimensionError("one beta per block expected");
  double ceiling = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(beta_bar[i] > 0.0)) throw InfeasibleParameters("co-coercivity constants must be positive");
    if (!(beta[i] > 0.0 && beta[i] <= beta_bar[i])) {
      throw InfeasibleParameters("chosen constants must satisfy 0 < beta_i <= beta_bar_i (block " +
                                 std::to_string(i) + ")");
    }
    ceiling = std::min(ceiling, 2.0 * beta[i] * dist.prob(i));
  }
  if (!(omega > 0.0 && omega < ceiling)) {
    throw InfeasibleParameters("relaxation weight must satisfy 0 < omega < 2 min_i beta_i p_i = " + fmt(ceiling) +
                               " (got " + fmt(omega) + ")");
  }
  ArcogConstants c;
  c.nu = nu;
  c.omega = omega;
  c.lambda0_bar = 0.0;
  c.lambda1 = c.lambda2 = c.lambda3 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = dist.prob(i);
    const double gap = 2.0 * beta[i] * p - omega;
    c.lambda0_bar = std::max(c.lambda0_bar, 1.0 / beta_bar[i]);
    c.lambda1 = std::min(c.lambda1, gap / p);
    c.lambda2 = std::min(c.lambda2, (1.0 - p) / gap);
    c.lambda3 = std::min(c.lambda3, 1.0 / gap);
  }
  const double a = 1.0 + omega * c.lambda0_bar;
  // A single block (p_1 = 1) gives lambda2 = 0, and the omega nu^2 / lambda2
  // term is then unbounded.
  const double inv_l2 = c.lambda2 > 0.0 ? 1.0 / c.lambda2 : std::numeric_limits<double>::infinity();
  c.c0 = 2.0 * a * (2.0 * nu * (nu - 1.0) + omega * nu * nu * inv_l2) +
         omega * omega * (nu - 1.0) * (nu - 1.0) * c.lambda0_bar * c.lambda0_bar / 4.0;
  c.c1 = 4.0 * (2.0 * c.c0 + nu * (nu - 3.0) * a) / ((nu - 3.0) * omega * omega);
  c.c2 = nu * nu * a / c.lambda3 + omega * nu * c.c1 / 4.0;
  return c;
}

std::vector<double> default_beta(const std::vector<double>& beta_bar, double fraction) {
  std::vector<double> out(beta_bar.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fraction * beta_bar[i];
  return out;
}

double default_arcog_omega(const std::vector<double>& beta, const BlockDistribution& dist) {
  if (beta.size() != dist.size()) throw DimensionError("one beta per block expected");
  double w = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < beta.size(); ++i) w = std::min(w, beta[i] * dist.prob(i));
  return w;
}

// ---------------------------------------------------------------- practical ARCOG

PracticalState PracticalState::start(const Vector& x0, double rebase_threshold) {
  PracticalState s;
  s.z = x0;
  s.w = Vector::Zero(x0.size());
  s.rebase_threshold = rebase_threshold;
  return s;
}

Vector reconstruct_iterate(const PracticalState& s) { return s.z + s.c * s.w; }

Vector reconstruct_previous(const PracticalState& s) {
  Vector out = s.z + s.c_prev * s.w;
  if (s.stashed_block) {
    out.segment(static_cast<Eigen::Index>(s.stash_offset), s.z_stash.size()) =
        s.z_stash + s.c_prev * s.w_stash;
  }
  return out;
}

void rebase(PracticalState& s) {
  const double C = s.c;
  const double T = s.tau;
  s.z += C * s.w;
  s.w *= T;
  if (s.stashed_block) {
    s.z_stash += C * s.w_stash;
    s.w_stash *= T;
  }
  s.c_prev = (s.c_prev - C) / T;
  s.c = 0.0;
  s.tau = 1.0;
  ++s.rebases;
}

void arcog_advance_practical(PracticalState& s, const BlockOperator& g,
                             const ArcogSchedule& schedule, double omega,
                             const BlockDistribution& dist, std::size_t i) {
  const auto& part = g.partition();
  part.check_index(i);
  check_distribution(g, dist);
  part.check_vector(s.z);
  const ArcogStep st = schedule.at(s.k);
  const double tau_next = s.tau * st.theta;
  if (!(tau_next >= kTauFloor)) {
    throw RenormalizationNeeded("tau fell below " + fmt(kTauFloor) + " at k = " + std::to_string(s.k) +
                                "; enable rebasing (positive rebase threshold)");
  }
  const auto off = static_cast<Eigen::Index>(part.offset(i));
  const auto sz = static_cast<Eigen::Index>(part.size(i));

  Vector g_cur, g_prev;
  if (g.separable()) {
    const Vector xi = part.block(s.z, i) + s.c * part.block(s.w, i);
    g.apply_block_local(xi, i, g_cur);
    if (s.stashed_block && *s.stashed_block == i) {
      const Vector pi = s.z_stash + s.c_prev * s.w_stash;
      g.apply_block_local(pi, i, g_prev);
    } else {
      const Vector pi = part.block(s.z, i) + s.c_prev * part.block(s.w, i);
      g.apply_block_local(pi, i, g_prev);
    }
  } else {
    g.apply_block(reconstruct_iterate(s), i, g_cur);
    g.apply_block(reconstruct_previous(s), i, g_prev);
  }
  const Vector d = st.eta * g_cur - st.gamma * g_prev;

  s.stashed_block = i;
  s.stash_offset = part.offset(i);
  s.z_stash = s.z.segment(off, sz);
  s.w_stash = s.w.segment(off, sz);

  const double scale = omega / (dist.prob(i) * tau_next);
  s.w.segment(off, sz) -= scale * d;
  s.z.segment(off, sz) += (scale * s.c) * d;

  s.c_prev = s.c;
  s.c += tau_next;
  s.tau = tau_next;
  ++s.k;
  if (s.rebase_threshold > 0.0 && s.tau < s.rebase_threshold) rebase(s);
}

PracticalState arcog_step_practical(const PracticalState& state, const BlockOperator& g,
                                    const ArcogSchedule& schedule, double omega,
                                    const BlockDistribution& dist, std::size_t i, long k) {
  if (k != state.k) {
    throw std::invalid_argument("practical state is at k = " + std::to_string(state.k) +
                                ", step requested for k = " + std::to_string(k));
  }
  PracticalState next = state;
  arcog_advance_practical(next, g, schedule, omega, dist, i);
  return next;
}

// ---------------------------------------------------------------- stateful solvers

RcogSolver::RcogSolver(OperatorPtr g, RcogParams params, BlockDistribution dist, const Vector& x0)
    : g_(std::move(g)), params_(params), dist_(std::move(dist)), x_(x0) {
  g_->partition().check_vector(x_);
  check_distribution(*g_, dist_);
  validate_rcog_params(params_, dist_);
}

Vector RcogSolver::previous() const {
  Vector out = x_;
  if (stashed_block_) g_->partition().block(out, *stashed_block_) = stash_;
  return out;
}

void RcogSolver::step(std::size_t i) {
  const auto& part = g_->partition();
  part.check_index(i);
  g_->apply_block(x_, i, g_cur_);
  if (stashed_block_) {
    // Evaluate at x^{k-1} by swapping the stashed block in and out.
    auto seg = part.block(x_, *stashed_block_);
    seg.swap(stash_);
    g_->apply_block(x_, i, g_prev_);
    seg.swap(stash_);
  } else {
    g_prev_ = g_cur_;
  }
  stash_ = part.block(x_, i);
  stashed_block_ = i;
  part.block(x_, i) -= (params_.omega / dist_.prob(i)) * (params_.eta * g_cur_ - params_.gamma * g_prev_);
  ++k_;
}

ArcogDirectSolver::ArcogDirectSolver(OperatorPtr g, ArcogSchedule schedule, double omega,
                                     BlockDistribution dist, const Vector& x0)
    : g_(std::move(g)), schedule_(schedule), omega_(omega), dist_(std::move(dist)), x_(x0), x_prev_(x0) {
  g_->partition().check_vector(x_);
  check_distribution(*g_, dist_);
}

void ArcogDirectSolver::step(std::size_t i) {
  Vector next = arcog_step_direct(x_, x_prev_, *g_, schedule_, omega_, dist_, i, k_);
  x_prev_.swap(x_);
  x_.swap(next);
  ++k_;
}

ArcogPracticalSolver::ArcogPracticalSolver(OperatorPtr g, ArcogSchedule schedule, double omega,
                                           BlockDistribution dist, const Vector& x0,
                                           double rebase_threshold)
    : g_(std::move(g)),
      schedule_(schedule),
      omega_(omega),
      dist_(std::move(dist)),
      state_(PracticalState::start(x0, rebase_threshold)) {
  g_->partition().check_vector(x0);
  check_distribution(*g_, dist_);
}

void ArcogPracticalSolver::step(std::size_t i) {
  arcog_advance_practical(state_, *g_, schedule_, omega_, dist_, i);
  ++k_;
}

}  // namespace blocksolve
