#include "blocksolve/app/checks.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <blocksolve/diagnostics.hpp>
#include <blocksolve/fedsim.hpp>
#include <blocksolve/instances.hpp>
#include <blocksolve/splitting.hpp>

#include "blocksolve/app/oracles.hpp"
#include "blocksolve/app/runner.hpp"

#ifndef BLOCKSOLVE_FIXTURE_DIR
#define BLOCKSOLVE_FIXTURE_DIR "fixtures"
#endif

namespace blocksolve::app {

std::string default_fixture_dir() { return BLOCKSOLVE_FIXTURE_DIR; }

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

/// Runs f(j) for j in [0, count) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F&& f) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto work = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < count;) {
      try {
        f(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < worker_count(threads, count); ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<double> column_mean(const std::vector<std::vector<double>>& rows) {
  std::vector<double> m(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += r[k];
  for (auto& v : m) v /= static_cast<double>(rows.size());
  return m;
}

struct Timed {
  CheckResult r;
  Clock::time_point t0 = Clock::now();
  double limit;
  Timed(int n, const char* title, double limit_seconds) : limit(limit_seconds) {
    r.id = "criterion " + std::to_string(n);
    r.title = title;
  }
  CheckResult finish(bool ok, const std::string& detail) {
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.passed = ok && r.seconds < limit;
    r.detail = detail + "; " + num(r.seconds) + " s (< " + num(limit) + " s)";
    return r;
  }
};

// ---------------------------------------------------------------- solvers

CheckResult practical_identity() {
  Timed t(1, "practical z/w form reproduces direct accelerated iterates", 10);
  auto g = random_separable_cocoercive(8, 5, 1);
  const auto dist = BlockDistribution::uniform(8);
  const auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  const Vector x0 = Vector::Zero(40);
  ArcogDirectSolver direct(g, ArcogSchedule(4), omega, dist, x0);
  ArcogPracticalSolver practical(g, ArcogSchedule(4), omega, dist, x0);
  IndexStream idx(1, dist);
  double worst = 0.0;
  for (long k = 0; k < 5000; ++k) {
    const std::size_t i = idx.next();
    direct.step(i);
    practical.step(i);
    const Vector xd = direct.current();
    worst = std::max(worst, (xd - practical.current()).norm() / (1.0 + xd.norm()));
  }
  return t.finish(worst <= 1e-6, "max relative deviation " + num(worst) + " (<= 1e-06), " +
                                     std::to_string(practical.state().rebases) + " rebases");
}

CheckResult rcog_descent() {
  Timed t(2, "non-accelerated exact conditional descent", 5);
  auto g = random_monotone_linear(4, 3, 21);
  const auto dist = BlockDistribution::uniform(4);
  const auto prm = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  std::mt19937_64 rng(1);
  RcogSolver s(g, prm, dist, gaussian_vector(rng, g->dim()));
  IndexStream idx(2, dist);
  double worst = -1e300;
  for (int k = 0; k < 500; ++k) {
    const auto m = rcog_descent_margin(s.current(), s.previous(), *g, prm, dist, g->solution());
    worst = std::max(worst, m.margin / (1.0 + m.lyapunov));
    s.step(idx.next());
  }
  return t.finish(worst <= 1e-12, "worst margin/(1+P_k) " + num(worst) + " (<= 1e-12) over 500 iterates");
}

CheckResult arcog_descent() {
  Timed t(3, "accelerated exact conditional descent", 10);
  auto g = random_separable_cocoercive(8, 3, 5);
  const auto dist = BlockDistribution::uniform(8);
  const auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  ArcogSchedule sched(4);
  std::mt19937_64 rng(3);
  ArcogDirectSolver s(g, sched, omega, dist, gaussian_vector(rng, g->dim()));
  IndexStream idx(8, dist);
  double worst = -1e300;
  for (long k = 0; k < 500; ++k) {
    const auto m = arcog_descent_margin(s.current(), s.previous(), *g, sched, omega, beta, dist, g->solution(), k);
    worst = std::max(worst, m.margin / (1.0 + m.lyapunov));
    s.step(idx.next());
  }
  return t.finish(worst <= 1e-12, "worst margin/(1+P_k) " + num(worst) + " (<= 1e-12) over 500 iterates");
}

/// ||G x^k||^2 for k = 0..K of a direct accelerated run from 0.
std::vector<double> arcog_residuals(const OperatorPtr& g, const BlockDistribution& dist, double omega,
                                    long steps, std::uint64_t seed) {
  ArcogDirectSolver s(g, ArcogSchedule(4), omega, dist, Vector::Zero(static_cast<Eigen::Index>(g->dim())));
  IndexStream idx(seed, dist);
  std::vector<double> y;
  y.reserve(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k <= steps; ++k) {
    y.push_back((*g)(s.current()).squaredNorm());
    if (k < steps) s.step(idx.next());
  }
  return y;
}

CheckResult arcog_rate(const CheckOptions& o) {
  Timed t(4, "accelerated O(1/k^2) residual rate and envelope", 60);
  auto g = random_separable_cocoercive(20, 5, 4, Spectrum::Singular);
  const auto dist = BlockDistribution::uniform(20);
  const auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  const auto c = arcog_constants(4, omega, beta, g->cocoercivity(), dist);
  const double d0 = g->solution().squaredNorm();
  const long K = 10000;
  std::vector<std::vector<double>> runs(20);
  parallel_for(20, o.threads, [&](std::size_t j) { runs[j] = arcog_residuals(g, dist, omega, K, 1 + j); });
  const auto mean = column_mean(runs);
  const double slope = fit_rate_slope(mean, 100, K).slope;
  double worst = 0.0;
  for (long k = 0; k <= K; ++k) worst = std::max(worst, mean[static_cast<std::size_t>(k)] / (c.envelope(k) * d0));
  return t.finish(slope <= -1.7 && worst <= 1.2,
                  "slope " + num(slope) + " (<= -1.7), worst mean/envelope " + num(worst) + " (<= 1.2)");
}

CheckResult rcog_ergodic(const CheckOptions& o) {
  Timed t(5, "non-accelerated ergodic residual bound", 60);
  auto g = random_monotone_linear(4, 3, 21);
  const auto dist = BlockDistribution::uniform(4);
  const auto prm = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  const long K = 2000;
  const std::size_t seeds = 100;
  std::vector<double> ergodic(seeds);
  parallel_for(seeds, o.threads, [&](std::size_t j) {
    RcogSolver s(g, prm, dist, Vector::Zero(12));
    IndexStream idx(1 + j, dist);
    double sum = 0;
    for (long k = 0; k <= K; ++k) {
      sum += (*g)(s.current()).squaredNorm();
      if (k < K) s.step(idx.next());
    }
    ergodic[j] = sum / static_cast<double>(K + 1);
  });
  double mean = 0;
  for (double v : ergodic) mean += v / static_cast<double>(seeds);
  const double bound = 5.0 * g->solution().squaredNorm() / (2.0 * prm.psi * static_cast<double>(K + 1));
  return t.finish(mean <= 1.2 * bound,
                  "mean ergodic residual " + num(mean) + ", bound " + num(bound) + ", ratio " + num(mean / bound) +
                      " (<= 1.2)");
}

CheckResult almost_sure_surrogate(const CheckOptions& o) {
  Timed t(12, "surrogate for almost-sure decay of (k+nu)||Gx^k||^2", 30);
  auto g = random_separable_cocoercive(8, 5, 12);
  const auto dist = BlockDistribution::uniform(8);
  const auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  std::vector<int> dec(20, 0);
  double worst_ratio = 0.0;
  std::vector<double> ratios(20);
  parallel_for(20, o.threads, [&](std::size_t j) {
    const auto tr = trend_surrogate(arcog_residuals(g, dist, omega, 5000, 100 + j), 4.0);
    dec[j] = tr.decreasing ? 1 : 0;
    ratios[j] = tr.last_decile / tr.first_decile;
  });
  int count = 0;
  for (std::size_t j = 0; j < 20; ++j) {
    count += dec[j];
    worst_ratio = std::max(worst_ratio, ratios[j]);
  }
  return t.finish(count >= 19, std::to_string(count) + "/20 seeds decreasing (>= 19), worst last/first decile " +
                                   num(worst_ratio) + " [surrogate]");
}

// ---------------------------------------------------------------- splitting

SplitProblemPtr affine(std::size_t users, std::size_t dim, std::uint64_t seed) {
  SplitInstanceOptions opt;
  opt.users = users;
  opt.dim = dim;
  return std::make_shared<const SplitProblem>(random_split_affine(opt, seed));
}

CheckResult consensus() {
  Timed t(6, "consensus resolvent against the dense product-space system", 5);
  std::mt19937_64 rng(6);
  const std::size_t n = 5, p = 6;
  const Matrix q = random_psd(rng, p, Spectrum::Wide);
  const Vector b = gaussian_vector(rng, p);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const double beta = 0.1 + 0.05 * s;
    const Vector u = 3.0 * gaussian_vector(rng, n * p);
    const Vector got = consensus_resolvent(u, n, beta, AffineMap{q, b}).hat;
    const Vector want = brute_force_consensus(u, n, beta, q, b);
    worst = std::max(worst, (got - want).norm() / (1.0 + want.norm()));
  }
  return t.finish(worst <= 1e-8, "worst relative disagreement " + num(worst) + " (<= 1e-08) on 100 inputs");
}

CheckResult fbfs_properties() {
  Timed t(7, "forward-backward-forward operator: zero, Lipschitz, star property", 10);
  auto prob = affine(4, 3, 7);
  const double l = prob->lipschitz_constant();
  const double lam = default_lambda(l, prob->rho);
  FbfsOperator s(prob, lam);
  const Vector xs = replicate(*prob->solution, 4);
  const double zero = s(xs).norm();
  std::mt19937_64 rng(7);
  double ratio = 0.0, star = 1e300;
  for (int trial = 0; trial < 10000; ++trial) {
    const Vector x = 2.0 * gaussian_vector(rng, 12), y = x + gaussian_vector(rng, 12) * std::pow(10.0, -(trial % 6));
    ratio = std::max(ratio, (s(x) - s(y)).norm() / (x - y).norm());
    const Vector sx = s(x);
    const double scale = 1.0 + (x - xs).squaredNorm() + sx.squaredNorm();
    star = std::min(star, (sx.dot(x - xs) - fbfs_rho_hat(lam, l, prob->rho) * sx.squaredNorm()) / scale);
  }
  const double ls = fbfs_lipschitz(lam, l);
  const bool ok = zero <= 1e-10 && ratio <= ls * (1 + 1e-10) && star >= -1e-10;
  return t.finish(ok, "||S x*|| " + num(zero) + " (<= 1e-10), Lipschitz ratio " + num(ratio) + " vs L_s " + num(ls) +
                          ", worst scaled star margin " + num(star) + " (>= -1e-10)");
}

CheckResult drs_cocoercive() {
  Timed t(8, "Douglas-Rachford residual is beta-co-coercive", 10);
  auto prob = affine(4, 3, 8);
  double worst = 1e300;
  std::mt19937_64 rng(8);
  for (double beta : {0.5, 1.0, 2.0}) {
    DrsOperator g(prob, beta);
    for (int trial = 0; trial < 3334; ++trial) {
      const Vector u = 2.0 * gaussian_vector(rng, 12), v = u + gaussian_vector(rng, 12) * std::pow(10.0, -(trial % 5));
      const Vector d = g(u) - g(v);
      const double scale = 1.0 + (u - v).squaredNorm() + d.squaredNorm();
      worst = std::min(worst, (d.dot(u - v) - beta * d.squaredNorm()) / scale);
    }
  }
  return t.finish(worst >= -1e-10, "worst scaled slack " + num(worst) + " (>= -1e-10) on 10^4 pairs");
}

// ---------------------------------------------------------------- federated

CheckResult fedog_fidelity() {
  Timed t(9, "federated optimistic gradient reproduces block solver on S", 10);
  auto prob = affine(6, 3, 9);
  const auto dist = BlockDistribution::uniform(6);
  const double lam = default_lambda(prob->lipschitz_constant(), prob->rho);
  const auto prm =
      derive_rcog_params(1.0, 0.0, std::vector<double>(6, fbfs_lipschitz(lam, prob->lipschitz_constant())), dist);
  const Vector x0 = Vector::Ones(3);
  FedOgSimulation sim(prob, lam, prm, dist, x0);
  RcogSolver ref(std::make_shared<const FbfsOperator>(prob, lam), prm, dist, replicate(x0, 6));
  IndexStream idx(9, dist);
  double iter = 0.0, mean = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const std::size_t i = idx.next();
    sim.round(i);
    ref.step(i);
    const Vector xr = ref.current();
    iter = std::max(iter, (sim.global_iterate() - xr).norm() / (1.0 + xr.norm()));
    const Vector m = sim.recomputed_mean();
    mean = std::max(mean, (sim.server_mean() - m).norm() / (1.0 + m.norm()));
  }
  return t.finish(iter <= 1e-10 && mean <= 1e-12,
                  "iterate deviation " + num(iter) + " (<= 1e-10), mean drift " + num(mean) + " (<= 1e-12)");
}

CheckResult acfeddr(const CheckOptions& o) {
  Timed t(10, "accelerated federated DR: fidelity, envelope and rate", 120);
  auto prob = affine(6, 4, 1);
  const auto dist = BlockDistribution::uniform(6);
  const double beta = 1.0, omega = beta * dist.p_min();
  const Vector u0 = Vector::Ones(4);
  AcFedDrSimulation sim(prob, beta, ArcogSchedule(4), omega, dist, u0);
  ArcogDirectSolver ref(std::make_shared<const DrsOperator>(prob, beta), ArcogSchedule(4), omega, dist,
                        replicate(u0, 6));
  IndexStream idx(1, dist);
  double fid = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const std::size_t i = idx.next();
    sim.round(i);
    ref.step(i);
    const Vector ur = ref.current();
    fid = std::max(fid, (sim.reconstructed_u() - ur).norm() / (1.0 + ur.norm()));
  }

  const long K = 5000;
  std::vector<std::vector<double>> runs(20);
  double d0 = 0.0;
  parallel_for(20, o.threads, [&](std::size_t j) {
    FederatedConfig cfg;
    cfg.algorithm = FederatedAlgorithm::AcFedDR;
    cfg.problem = prob;
    cfg.seed = 1 + j;
    cfg.rounds = K;
    cfg.beta = beta;
    cfg.x0 = u0;
    cfg.keep_ledger = false;
    const auto tr = run_federated(cfg);
    for (const auto& r : tr.rows) runs[j].push_back(r.certificate);
    if (j == 0) d0 = tr.initial_distance_sq;
  });
  const auto mean = column_mean(runs);
  const std::vector<double> b(6, beta);
  const auto c = arcog_constants(4, omega, b, b, dist);
  double worst = 0.0;
  for (long k = 0; k <= K; ++k) {
    worst = std::max(worst, mean[static_cast<std::size_t>(k)] / (beta * beta * c.envelope(k) * d0));
  }
  const double slope = fit_rate_slope(mean, 100, K).slope;
  return t.finish(fid <= 1e-6 && worst <= 1.2 && slope <= -1.7,
                  "deviation " + num(fid) + " (<= 1e-06), worst mean/bound " + num(worst) + " (<= 1.2), slope " +
                      num(slope) + " (<= -1.7)");
}

CheckResult fedog_bound(const CheckOptions& o) {
  Timed t(11, "federated optimistic gradient ergodic certificate bound", 60);
  auto prob = affine(4, 3, 11);
  const long K = 2000;
  const std::size_t seeds = 50;
  std::vector<double> ergodic(seeds);
  double psi = 0, lam = 0, d = 0;
  parallel_for(seeds, o.threads, [&](std::size_t j) {
    FederatedConfig cfg;
    cfg.problem = prob;
    cfg.seed = 1 + j;
    cfg.rounds = K;
    cfg.keep_ledger = false;
    const auto tr = run_federated(cfg);
    double sum = 0;
    for (const auto& r : tr.rows) sum += r.certificate;
    ergodic[j] = sum / static_cast<double>(K + 1);
    if (j == 0) {
      psi = tr.psi;
      lam = tr.lambda;
      d = tr.initial_distance_sq;
    }
  });
  double mean = 0;
  for (double v : ergodic) mean += v / static_cast<double>(seeds);
  const double gap = 1.0 - prob->lipschitz_constant() * lam;
  const double bound = 5.0 * d / (2.0 * psi * gap * gap * static_cast<double>(K + 1));
  return t.finish(mean <= 1.2 * bound, "mean ergodic certificate " + num(mean) + ", bound " + num(bound) +
                                           ", ratio " + num(mean / bound) + " (<= 1.2)");
}

}  // namespace

CheckResult run_criterion(int number, const CheckOptions& opts) {
  switch (number) {
    case 1: return practical_identity();
    case 2: return rcog_descent();
    case 3: return arcog_descent();
    case 4: return arcog_rate(opts);
    case 5: return rcog_ergodic(opts);
    case 6: return consensus();
    case 7: return fbfs_properties();
    case 8: return drs_cocoercive();
    case 9: return fedog_fidelity();
    case 10: return acfeddr(opts);
    case 11: return fedog_bound(opts);
    case 12: return almost_sure_surrogate(opts);
    default: throw std::invalid_argument("no criterion " + std::to_string(number));
  }
}

std::vector<CheckResult> run_suite(const std::string& suite, const CheckOptions& opts,
                                   const CheckCallback& on_result) {
  std::vector<int> criteria;
  bool fixtures = false;
  if (suite == "lemmas") {
    fixtures = true;
    criteria = {6, 7, 8};
  } else if (suite == "solvers") {
    criteria = {1, 2, 3, 4, 5, 12};
  } else if (suite == "federated") {
    criteria = {9, 10, 11};
  } else if (suite == "all") {
    fixtures = true;
    criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  } else {
    throw std::invalid_argument("unknown suite '" + suite + "' (expected lemmas, solvers, federated or all)");
  }
  std::vector<CheckResult> out;
  auto emit = [&](CheckResult r) {
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  };
  if (fixtures) {
    for (auto& r : run_fixture_checks(opts.fixture_dir.empty() ? default_fixture_dir() : opts.fixture_dir)) emit(r);
  }
  for (int c : criteria) {
    try {
      emit(run_criterion(c, opts));
    } catch (const std::exception& e) {
      CheckResult r;
      r.id = "criterion " + std::to_string(c);
      r.title = "aborted";
      r.detail = e.what();
      emit(r);
    }
  }
  return out;
}

std::string format_result(const CheckResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + "  " + r.id + "  " + r.title + ": " + r.detail;
}

}  // namespace blocksolve::app
