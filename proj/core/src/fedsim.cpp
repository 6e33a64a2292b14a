#include "blocksolve/fedsim.hpp"

#include <stdexcept>

#include "blocksolve/diagnostics.hpp"
#include "blocksolve/errors.hpp"

namespace blocksolve {

namespace {

RoundMessage message(Direction dir, long k, std::size_t user, const char* payload, std::size_t doubles) {
  return RoundMessage{dir, k, user, payload, doubles, doubles * sizeof(double)};
}

auto seg(const Vector& v, std::size_t i, std::size_t p) {
  return v.segment(static_cast<Eigen::Index>(i * p), static_cast<Eigen::Index>(p));
}
auto seg(Vector& v, std::size_t i, std::size_t p) {
  return v.segment(static_cast<Eigen::Index>(i * p), static_cast<Eigen::Index>(p));
}

void check_users(const SplitProblemPtr& problem, const BlockDistribution& dist, const Vector& x0) {
  if (!problem) throw std::invalid_argument("federated simulation needs a problem");
  if (dist.size() != problem->num_users()) throw DimensionError("one sampling probability per user expected");
  if (x0.size() != static_cast<Eigen::Index>(problem->dim)) throw DimensionError("start point has wrong length");
}

}  // namespace

// ---------------------------------------------------------------- FedOG

FedOgSimulation::FedOgSimulation(SplitProblemPtr problem, double lambda, RcogParams params,
                                 BlockDistribution dist, const Vector& x0)
    : op_(problem, lambda), params_(params), dist_(std::move(dist)) {
  check_users(problem, dist_, x0);
  validate_rcog_params(params_, dist_);
  const std::size_t n = problem->num_users();
  users_.resize(n);
  ubar_ = Vector::Zero(x0.size());
  for (std::size_t i = 0; i < n; ++i) {
    users_[i].x_cur = x0;
    users_[i].x_prev = x0;
    users_[i].u = op_.user_shift(x0, i);
    ubar_ += users_[i].u;
  }
  // The server starts from the true mean of the u_i^0 so the incremental
  // updates track (1/n) sum_i u_i exactly.
  ubar_ /= static_cast<double>(n);
  uhat_cur_ = op_.central_resolvent(ubar_);
  uhat_prev_ = uhat_cur_;
}

std::vector<RoundMessage> FedOgSimulation::round(std::size_t i) {
  if (i >= users_.size()) throw DimensionError("sampled user out of range");
  const std::size_t p = static_cast<std::size_t>(ubar_.size());
  std::vector<RoundMessage> ledger;
  ledger.push_back(message(Direction::ServerToUser, k_, i, "u_hat_pair", 2 * p));

  User& u = users_[i];
  const Vector& x_km1 = (u.last_active == k_ - 1) ? u.x_prev : u.x_cur;
  Vector d_prev, d_cur;
  op_.block_at(x_km1, uhat_prev_, i, d_prev);
  op_.block_at(u.x_cur, uhat_cur_, i, d_cur);
  Vector x_new = u.x_cur - (params_.omega / dist_.prob(i)) * (params_.eta * d_cur - params_.gamma * d_prev);
  Vector u_new = op_.user_shift(x_new, i);
  const Vector delta = u_new - u.u;
  u.x_prev = std::move(u.x_cur);
  u.x_cur = std::move(x_new);
  u.u = std::move(u_new);
  u.last_active = k_;
  ledger.push_back(message(Direction::UserToServer, k_, i, "delta_u", p));

  ubar_ += delta / static_cast<double>(users_.size());
  uhat_prev_ = uhat_cur_;
  uhat_cur_ = op_.central_resolvent(ubar_);
  ++k_;
  return ledger;
}

Vector FedOgSimulation::global_iterate() const {
  const std::size_t p = static_cast<std::size_t>(ubar_.size());
  Vector x(static_cast<Eigen::Index>(users_.size() * p));
  for (std::size_t i = 0; i < users_.size(); ++i) seg(x, i, p) = users_[i].x_cur;
  return x;
}

Vector FedOgSimulation::recomputed_mean() const {
  Vector m = Vector::Zero(ubar_.size());
  for (const auto& u : users_) m += u.u;
  return m / static_cast<double>(users_.size());
}

double FedOgSimulation::certificate() const {
  double r = 0.0;
  for (const auto& u : users_) r += (u.x_cur - uhat_cur_).squaredNorm();
  return r;
}

// ---------------------------------------------------------------- AcFedDR

AcFedDrSimulation::AcFedDrSimulation(SplitProblemPtr problem, double beta, ArcogSchedule schedule,
                                     double omega, BlockDistribution dist, const Vector& u0,
                                     double rebase_threshold)
    : op_(problem, beta),
      schedule_(schedule),
      omega_(omega),
      dist_(std::move(dist)),
      rebase_threshold_(rebase_threshold) {
  check_users(problem, dist_, u0);
  if (!(omega > 0.0 && omega < 2.0 * beta * dist_.p_min())) {
    throw InfeasibleParameters("relaxation weight must satisfy 0 < omega < 2 beta p_min");
  }
  const std::size_t n = problem->num_users();
  users_.resize(n);
  for (auto& u : users_) {
    u.z = u0;
    u.z_prev = u0;
    u.w = Vector::Zero(u0.size());
    u.w_prev = u.w;
  }
  // Server means start at the user means; u_hat^0 is the consensus point of u^0.
  zbar_ = u0;
  wbar_ = Vector::Zero(u0.size());
  uhat_cur_ = op_.central_resolvent(zbar_);
  uhat_prev_ = uhat_cur_;
}

AcFedDrSimulation::Map AcFedDrSimulation::pending(std::size_t epoch) const {
  Map m;
  for (std::size_t e = epoch; e < epochs_.size(); ++e) {
    m.shift += epochs_[e].shift * m.scale;
    m.scale *= epochs_[e].scale;
  }
  return m;
}

void AcFedDrSimulation::apply(const Map& m, Vector& z, Vector& w) {
  z += m.shift * w;
  w *= m.scale;
}

std::vector<RoundMessage> AcFedDrSimulation::round(std::size_t i) {
  if (i >= users_.size()) throw DimensionError("sampled user out of range");
  const std::size_t p = static_cast<std::size_t>(zbar_.size());
  std::vector<RoundMessage> ledger;

  User& u = users_[i];
  const bool stale = u.epoch != epochs_.size();
  // u_hat^k, u_hat^{k-1}, (c_k, c_{k-1}, tau_{k+1}) and any pending rebase map.
  ledger.push_back(message(Direction::ServerToUser, k_, i, "u_hat_pair", 2 * p + 3 + (stale ? 2 : 0)));
  if (stale) {
    const Map m = pending(u.epoch);
    apply(m, u.z, u.w);
    apply(m, u.z_prev, u.w_prev);
    u.epoch = epochs_.size();
  }

  const ArcogStep st = schedule_.at(k_);
  const double tau_next = tau_ * st.theta;
  if (!(tau_next >= kTauFloor)) {
    throw RenormalizationNeeded("tau fell below the representable floor at round " + std::to_string(k_));
  }
  const bool consecutive = u.last_active == k_ - 1;
  const Vector u_prev = consecutive ? Vector(u.z_prev + c_prev_ * u.w_prev) : Vector(u.z + c_prev_ * u.w);
  const Vector u_cur = u.z + c_ * u.w;
  const double beta = op_.beta();
  const Vector d_hat = uhat_prev_ - op_.user_resolvent(i, 2.0 * uhat_prev_ - u_prev);
  const Vector d = uhat_cur_ - op_.user_resolvent(i, 2.0 * uhat_cur_ - u_cur);
  const Vector dir = st.eta * d - st.gamma * d_hat;
  const double s = omega_ / (beta * tau_next * dist_.prob(i));
  const Vector dw = -s * dir;
  const Vector dz = (s * c_) * dir;
  u.z_prev = u.z;
  u.w_prev = u.w;
  u.z += dz;
  u.w += dw;
  u.last_active = k_;
  ledger.push_back(message(Direction::UserToServer, k_, i, "delta_wz", 2 * p));

  const double inv_n = 1.0 / static_cast<double>(users_.size());
  wbar_ += inv_n * dw;
  zbar_ += inv_n * dz;
  c_prev_ = c_;
  c_ += tau_next;
  tau_ = tau_next;
  uhat_prev_ = uhat_cur_;
  uhat_cur_ = op_.central_resolvent(zbar_ + c_ * wbar_);
  ++k_;

  if (rebase_threshold_ > 0.0 && tau_ < rebase_threshold_) {
    const Map m{c_, tau_};
    apply(m, zbar_, wbar_);
    c_prev_ = (c_prev_ - m.shift) / m.scale;
    c_ = 0.0;
    tau_ = 1.0;
    epochs_.push_back(m);
  }
  return ledger;
}

Vector AcFedDrSimulation::reconstructed_u() const {
  const std::size_t p = static_cast<std::size_t>(zbar_.size());
  Vector out(static_cast<Eigen::Index>(users_.size() * p));
  for (std::size_t i = 0; i < users_.size(); ++i) {
    Vector z = users_[i].z;
    Vector w = users_[i].w;
    apply(pending(users_[i].epoch), z, w);
    seg(out, i, p) = z + c_ * w;
  }
  return out;
}

Vector AcFedDrSimulation::recomputed_z_mean() const {
  Vector m = Vector::Zero(zbar_.size());
  for (const auto& u : users_) {
    Vector z = u.z;
    Vector w = u.w;
    apply(pending(u.epoch), z, w);
    m += z;
  }
  return m / static_cast<double>(users_.size());
}

Vector AcFedDrSimulation::recomputed_w_mean() const {
  Vector m = Vector::Zero(wbar_.size());
  for (const auto& u : users_) m += pending(u.epoch).scale * u.w;
  return m / static_cast<double>(users_.size());
}

double AcFedDrSimulation::certificate() const {
  const std::size_t p = static_cast<std::size_t>(zbar_.size());
  const Vector u = reconstructed_u();
  double r = 0.0;
  for (std::size_t i = 0; i < users_.size(); ++i) {
    r += (uhat_cur_ - op_.user_resolvent(i, 2.0 * uhat_cur_ - Vector(seg(u, i, p)))).squaredNorm();
  }
  return r;
}

// ---------------------------------------------------------------- runs

std::string to_string(Direction d) {
  return d == Direction::ServerToUser ? "server_to_user" : "user_to_server";
}

std::string to_string(FederatedAlgorithm a) { return a == FederatedAlgorithm::FedOG ? "fedog" : "acfeddr"; }

FederatedAlgorithm federated_algorithm_from_string(const std::string& name) {
  if (name == "fedog") return FederatedAlgorithm::FedOG;
  if (name == "acfeddr") return FederatedAlgorithm::AcFedDR;
  throw std::invalid_argument("unknown federated algorithm '" + name + "' (expected fedog or acfeddr)");
}

FederatedTrace run_federated(const FederatedConfig& cfg) {
  if (!cfg.problem) throw std::invalid_argument("federated run needs a problem");
  if (cfg.rounds < 0) throw std::invalid_argument("rounds must be nonnegative");
  const SplitProblem& prob = *cfg.problem;
  prob.validate();
  const std::size_t n = prob.num_users();
  const BlockDistribution dist = cfg.probs ? BlockDistribution(*cfg.probs) : BlockDistribution::uniform(n);
  const Vector x0 = cfg.x0 ? *cfg.x0 : Vector::Zero(static_cast<Eigen::Index>(prob.dim));
  IndexStream stream(cfg.seed, dist);
  FederatedTrace tr;
  std::size_t bytes = 0;

  // lyap(current, previous) on the stacked iterate; empty when not tracked.
  auto drive = [&](auto& sim, auto&& stacked, auto&& lyap) {
    Vector prev = cfg.lyapunov ? stacked(sim) : Vector();
    for (long k = 0; k <= cfg.rounds; ++k) {
      FederatedRow row;
      row.round = k;
      row.certificate = sim.certificate();
      if (cfg.lyapunov) {
        const Vector cur = stacked(sim);
        row.lyapunov = lyap(cur, prev);
        prev = cur;
      }
      if (k < cfg.rounds) {
        const std::size_t i = stream.next();
        row.sampled_user = i;
        auto msgs = sim.round(i);
        for (const auto& m : msgs) bytes += m.bytes;
        if (cfg.keep_ledger) tr.ledger.insert(tr.ledger.end(), msgs.begin(), msgs.end());
      }
      row.cumulative_bytes = bytes;
      tr.rows.push_back(row);
    }
  };

  if (cfg.algorithm == FederatedAlgorithm::FedOG) {
    const double l = prob.lipschitz_constant();
    const double lambda = cfg.lambda ? *cfg.lambda : default_lambda(l, prob.rho);
    const double omega = cfg.omega ? *cfg.omega : 1.0;
    const double ls = fbfs_lipschitz(lambda, l);
    const RcogParams prm = derive_rcog_params(omega, 0.0, std::vector<double>(n, ls), dist);
    FedOgSimulation sim(cfg.problem, lambda, prm, dist, x0);
    tr.lambda = lambda;
    tr.omega = omega;
    tr.psi = prm.psi;
    std::optional<Vector> xs;
    if (prob.solution) {
      tr.initial_distance_sq = static_cast<double>(n) * (x0 - *prob.solution).squaredNorm();
      if (cfg.lyapunov) xs = replicate(*prob.solution, n);
    }
    drive(
        sim, [](const FedOgSimulation& s) { return s.global_iterate(); },
        [&](const Vector& cur, const Vector& prev) -> std::optional<double> {
          if (!xs) return std::nullopt;
          return lyapunov_rcog(cur, prev, sim.fbfs(), prm, *xs).value;
        });
  } else {
    const double beta = cfg.beta ? *cfg.beta : 1.0;
    const double omega = cfg.omega ? *cfg.omega : beta * dist.p_min();
    AcFedDrSimulation sim(cfg.problem, beta, ArcogSchedule(cfg.nu), omega, dist, x0, cfg.rebase_threshold);
    tr.beta = beta;
    tr.omega = omega;
    const auto& us = sim.drs().certificates().solution;
    if (us) tr.initial_distance_sq = (replicate(x0, n) - *us).squaredNorm();
    const ArcogSchedule schedule(cfg.nu);
    const std::vector<double> beta_i(n, beta);
    long k = 0;
    drive(
        sim, [](const AcFedDrSimulation& s) { return s.reconstructed_u(); },
        [&](const Vector& cur, const Vector& prev) -> std::optional<double> {
          const long kk = k++;
          if (!us || !cfg.lyapunov) return std::nullopt;
          return lyapunov_arcog(cur, prev, sim.drs(), schedule, omega, beta_i, *us, kk).value;
        });
  }
  return tr;
}

}  // namespace blocksolve
