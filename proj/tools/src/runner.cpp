#include "blocksolve/app/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <thread>

#include <json.hpp>

#include <blocksolve/diagnostics.hpp>
#include <blocksolve/errors.hpp>
#include <blocksolve/fedsim.hpp>
#include <blocksolve/problem_io.hpp>

namespace blocksolve::app {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t cap = requested;
  if (cap == 0) {
    if (const char* env = std::getenv("BLOCKSOLVE_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && *end == '\0' && v > 0) cap = static_cast<std::size_t>(v);
    }
  }
  if (cap == 0) cap = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(cap, jobs));
}

namespace {

using Clock = std::chrono::steady_clock;

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

struct Setup {
  std::string problem_text;
  std::string hash;
  std::optional<BlockDistribution> dist;
  Vector x0;
  std::optional<Vector> xs;
  double d0 = 0.0;
  // block solvers
  OperatorPtr g;
  RcogParams rcog;
  std::optional<ArcogSchedule> schedule;
  double omega = 0.0;
  std::vector<double> beta, beta_bar;
  std::optional<ArcogConstants> constants;
  // federated
  SplitProblemPtr split;
  double lambda = 0.0;
  double lipschitz = 0.0;
  double fed_beta = 1.0;
};

Setup prepare(const RunConfig& cfg, const std::string& config_dir) {
  Setup s;
  if (cfg.problem_file) {
    const std::string path = resolve_path(config_dir, *cfg.problem_file);
    if (!fs::exists(path)) throw ConfigError("problem_file '" + path + "' does not exist");
    s.problem_text = read_text_file(path);
  } else {
    s.problem_text = *cfg.problem_inline;
  }
  s.hash = config_hash(cfg, s.problem_text);

  if (cfg.federated()) {
    if (!is_split_problem_document(s.problem_text)) {
      throw ConfigError("solver '" + cfg.solver + "' needs a split problem (kind split or random_split_affine)");
    }
    auto prob = std::make_shared<SplitProblem>(split_problem_from_json(s.problem_text));
    prob->validate();
    s.split = prob;
    const std::size_t n = prob->num_users();
    s.dist = cfg.probs ? BlockDistribution(*cfg.probs) : BlockDistribution::uniform(n);
    if (s.dist->size() != n) throw ConfigError("'probs' needs one entry per user");
    s.x0 = cfg.x0 ? Eigen::Map<const Vector>(cfg.x0->data(), static_cast<Eigen::Index>(cfg.x0->size())).eval()
                  : Vector::Zero(static_cast<Eigen::Index>(prob->dim));
    if (s.x0.size() != static_cast<Eigen::Index>(prob->dim)) throw ConfigError("'x0' has the wrong length");
    if (cfg.solver == "fedog") {
      s.lipschitz = prob->lipschitz_constant();
      s.lambda = cfg.lambda ? *cfg.lambda : default_lambda(s.lipschitz, prob->rho);
      FbfsOperator check(s.split, s.lambda);  // range check
      s.omega = cfg.omega ? *cfg.omega : 1.0;
      s.rcog = derive_rcog_params(s.omega, 0.0, std::vector<double>(n, fbfs_lipschitz(s.lambda, s.lipschitz)), *s.dist);
      if (prob->solution) s.d0 = static_cast<double>(n) * (s.x0 - *prob->solution).squaredNorm();
    } else {
      s.fed_beta = cfg.beta ? *cfg.beta : 1.0;
      s.omega = cfg.omega ? *cfg.omega : s.fed_beta * s.dist->p_min();
      DrsOperator drs(s.split, s.fed_beta);
      std::vector<double> b(n, s.fed_beta);
      s.constants = arcog_constants(cfg.nu, s.omega, b, b, *s.dist);
      if (drs.certificates().solution) s.d0 = (replicate(s.x0, n) - *drs.certificates().solution).squaredNorm();
    }
    return s;
  }

  if (is_split_problem_document(s.problem_text)) {
    throw ConfigError("solver '" + cfg.solver + "' needs an operator problem, got a split problem");
  }
  s.g = operator_from_json(s.problem_text);
  const std::size_t n = s.g->num_blocks();
  s.dist = cfg.probs ? BlockDistribution(*cfg.probs) : BlockDistribution::uniform(n);
  if (s.dist->size() != n) throw ConfigError("'probs' needs one entry per block");
  s.x0 = cfg.x0 ? Eigen::Map<const Vector>(cfg.x0->data(), static_cast<Eigen::Index>(cfg.x0->size())).eval()
                : Vector::Zero(static_cast<Eigen::Index>(s.g->dim()));
  if (s.x0.size() != static_cast<Eigen::Index>(s.g->dim())) throw ConfigError("'x0' has the wrong length");
  if (s.g->certificates().solution) {
    s.xs = s.g->solution();
    s.d0 = (s.x0 - *s.xs).squaredNorm();
  }
  if (cfg.solver == "rcog") {
    const double rho = cfg.rho ? *cfg.rho : s.g->certificates().weak_minty_rho.value_or(0.0);
    s.omega = cfg.omega ? *cfg.omega : 1.0;
    s.rcog = derive_rcog_params(s.omega, rho, s.g->certificates().lipschitz, *s.dist);
  } else {
    s.schedule = ArcogSchedule(cfg.nu);
    try {
      s.beta_bar = s.g->cocoercivity();
    } catch (const CertificateUnavailable&) {
      throw InfeasibleParameters("accelerated solver needs per-block co-coercivity constants beta_bar_i "
                                 "(declare them under certificates.cocoercivity)");
    }
    s.beta = default_beta(s.beta_bar, cfg.beta_fraction);
    s.omega = cfg.omega ? *cfg.omega : default_arcog_omega(s.beta, *s.dist);
    s.constants = arcog_constants(cfg.nu, s.omega, s.beta, s.beta_bar, *s.dist);
  }
  return s;
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string trace;
  long iterations = 0;
  std::size_t rows = 0;
  double wall = 0.0;
  std::vector<double> series;  // ||G x^k||^2 or the federated certificate, every k
  SummableInputs summable;
  std::optional<double> worst_margin;  // max_k margin / (1 + Lyapunov)
  std::size_t rebases = 0;
};

std::unique_ptr<Solver> make_solver(const RunConfig& cfg, const Setup& s) {
  if (cfg.solver == "rcog") return std::make_unique<RcogSolver>(s.g, s.rcog, *s.dist, s.x0);
  if (cfg.solver == "arcog_direct") return std::make_unique<ArcogDirectSolver>(s.g, *s.schedule, s.omega, *s.dist, s.x0);
  return std::make_unique<ArcogPracticalSolver>(s.g, *s.schedule, s.omega, *s.dist, s.x0, cfg.rebase_threshold);
}

void write_meta(const fs::path& path, const RunConfig& cfg, const Setup& s, const SeedOutcome& o,
                const char* columns) {
  json m;
  m["config_hash"] = s.hash;
  m["seed"] = o.seed;
  m["solver"] = cfg.solver;
  m["rows"] = o.rows;
  m["columns"] = columns;
  std::ofstream(path) << m.dump(2) << "\n";
}

SeedOutcome run_block_seed(const RunConfig& cfg, const Setup& s, std::uint64_t seed, const fs::path& dir) {
  SeedOutcome o;
  o.seed = seed;
  const auto t0 = Clock::now();
  const BlockOperator& g = *s.g;
  const auto& part = g.partition();
  const bool arcog = cfg.solver != "rcog";
  const bool lyap = cfg.diagnostics.lyapunov && s.xs;
  const bool margins = cfg.diagnostics.descent_margins && s.xs && s.dist->size() <= kEnumerationCap;
  const bool summable = cfg.diagnostics.summable_checks && arcog;
  auto solver = make_solver(cfg, s);
  IndexStream idx(seed, *s.dist);

  const fs::path trace = dir / ("trace_seed" + std::to_string(seed) + ".csv");
  o.trace = trace.filename().string();
  std::ofstream out(trace, std::ios::binary);
  out << kTraceHeader << "\n";

  Vector gprev = g(s.x0);
  const long K = cfg.max_iters;
  for (long k = 0; k <= K; ++k) {
    const Vector x = solver->current();
    const Vector xp = solver->previous();
    const Vector gx = g(x);
    const double res = gx.squaredNorm();
    const double step = (x - xp).squaredNorm();
    o.series.push_back(res);
    std::optional<double> dist_sq, lyap_v, margin;
    if (s.xs) dist_sq = (x - *s.xs).squaredNorm();
    if (lyap) {
      lyap_v = arcog ? lyapunov_arcog(x, xp, g, *s.schedule, s.omega, s.beta, *s.xs, k).value
                     : lyapunov_rcog(x, xp, g, s.rcog, *s.xs).value;
    }
    if (margins) {
      const DescentMargin m = arcog
                                  ? arcog_descent_margin(x, xp, g, *s.schedule, s.omega, s.beta, *s.dist, *s.xs, k)
                                  : rcog_descent_margin(x, xp, g, s.rcog, *s.dist, *s.xs);
      margin = m.margin;
      const double scaled = m.margin / (1.0 + m.lyapunov);
      o.worst_margin = o.worst_margin ? std::max(*o.worst_margin, scaled) : scaled;
    }
    if (summable) {
      const ArcogStep st = s.schedule->at(k);
      o.summable.combo_sq.push_back((st.eta * gx - st.gamma * gprev).squaredNorm());
      o.summable.step_sq.push_back(step);
      o.summable.res_sq.push_back(res);
      double bd = 0.0;
      for (std::size_t i = 0; i < part.num_blocks(); ++i) {
        bd += s.beta_bar[i] * (part.block(gx, i) - part.block(gprev, i)).squaredNorm();
      }
      o.summable.block_diff.push_back(bd);
    }
    gprev = gx;

    const bool stop = k == K || (cfg.tol > 0.0 && res <= cfg.tol);
    std::optional<std::size_t> block;
    if (!stop) block = idx.next();
    if (k % cfg.record_every == 0 || stop) {
      out << k << ',' << (block ? std::to_string(*block) : std::string()) << ',' << format_number(res) << ','
          << format_number(step) << ',' << opt(dist_sq) << ',' << opt(lyap_v) << ',' << opt(margin) << '\n';
      ++o.rows;
    }
    o.iterations = k;
    if (stop) break;
    solver->step(*block);
  }
  if (auto* p = dynamic_cast<ArcogPracticalSolver*>(solver.get())) o.rebases = p->state().rebases;
  out.close();
  o.wall = std::chrono::duration<double>(Clock::now() - t0).count();
  write_meta(dir / ("trace_seed" + std::to_string(seed) + ".meta.json"), cfg, s, o, kTraceHeader);
  return o;
}

SeedOutcome run_federated_seed(const RunConfig& cfg, const Setup& s, std::uint64_t seed, const fs::path& dir) {
  SeedOutcome o;
  o.seed = seed;
  const auto t0 = Clock::now();
  FederatedConfig fc;
  fc.algorithm = federated_algorithm_from_string(cfg.solver);
  fc.problem = s.split;
  fc.seed = seed;
  fc.rounds = cfg.max_iters;
  if (cfg.solver == "fedog") fc.lambda = s.lambda;
  if (cfg.solver == "acfeddr") fc.beta = s.fed_beta;
  fc.omega = s.omega;
  fc.nu = cfg.nu;
  fc.probs = s.dist->probs();
  fc.x0 = s.x0;
  fc.rebase_threshold = cfg.rebase_threshold;
  fc.lyapunov = cfg.diagnostics.lyapunov;
  const FederatedTrace tr = run_federated(fc);

  const fs::path trace = dir / ("trace_seed" + std::to_string(seed) + ".csv");
  o.trace = trace.filename().string();
  std::ofstream out(trace, std::ios::binary);
  out << kFederatedHeader << "\n";
  for (const auto& r : tr.rows) {
    o.series.push_back(r.certificate);
    const bool last = r.round == static_cast<long>(tr.rows.size()) - 1;
    if (r.round % cfg.record_every == 0 || last) {
      out << r.round << ',' << (r.sampled_user ? std::to_string(*r.sampled_user) : std::string()) << ','
          << format_number(r.certificate) << ',' << opt(r.lyapunov) << ',' << r.cumulative_bytes << '\n';
      ++o.rows;
    }
  }
  out.close();
  std::ofstream ledger(dir / ("ledger_seed" + std::to_string(seed) + ".jsonl"), std::ios::binary);
  for (const auto& m : tr.ledger) {
    json j;
    j["round"] = m.round;
    j["direction"] = to_string(m.direction);
    j["user"] = m.user;
    j["payload"] = m.payload;
    j["doubles"] = m.doubles;
    j["bytes"] = m.bytes;
    ledger << j.dump() << '\n';
  }
  o.iterations = cfg.max_iters;
  o.wall = std::chrono::duration<double>(Clock::now() - t0).count();
  write_meta(dir / ("trace_seed" + std::to_string(seed) + ".meta.json"), cfg, s, o, kFederatedHeader);
  return o;
}

std::vector<double> seed_mean(const std::vector<SeedOutcome>& runs) {
  std::size_t len = runs.front().series.size();
  for (const auto& r : runs) len = std::min(len, r.series.size());
  std::vector<double> m(len, 0.0);
  for (const auto& r : runs)
    for (std::size_t k = 0; k < len; ++k) m[k] += r.series[k];
  for (auto& v : m) v /= static_cast<double>(runs.size());
  return m;
}

json summarize(const RunConfig& cfg, const Setup& s, const std::vector<SeedOutcome>& runs, double wall,
               bool& ok) {
  json j;
  j["config_hash"] = s.hash;
  j["solver"] = cfg.solver;
  j["initial_distance_sq"] = s.d0;
  j["wall_seconds"] = wall;
  json params;
  params["omega"] = s.omega;
  if (cfg.solver == "rcog" || cfg.solver == "fedog") {
    params["gamma"] = s.rcog.gamma;
    params["eta"] = s.rcog.eta;
    params["psi"] = s.rcog.psi;
    params["rho"] = s.rcog.rho;
  }
  if (cfg.solver == "fedog") params["lambda"] = s.lambda;
  if (cfg.solver == "acfeddr") params["beta"] = s.fed_beta;
  if (s.constants) {
    params["nu"] = cfg.nu;
    params["C0"] = s.constants->c0;
    params["C1"] = s.constants->c1;
    params["C2"] = s.constants->c2;
    params["lambda0_bar"] = s.constants->lambda0_bar;
  }
  j["parameters"] = params;

  json seeds = json::array();
  std::size_t decreasing = 0;
  for (const auto& r : runs) {
    json e;
    e["seed"] = r.seed;
    e["config_hash"] = s.hash;
    e["trace"] = r.trace;
    e["rows"] = r.rows;
    e["iterations"] = r.iterations;
    e["wall_seconds"] = r.wall;
    e["final"] = r.series.back();
    double sum = 0;
    for (double v : r.series) sum += v;
    e["ergodic_mean"] = sum / static_cast<double>(r.series.size());
    const TrendSurrogate t = trend_surrogate(r.series, cfg.nu);
    e["trend_surrogate"] = {{"first_decile", t.first_decile}, {"last_decile", t.last_decile}, {"decreasing", t.decreasing}};
    if (t.decreasing) ++decreasing;
    if (r.worst_margin) e["worst_scaled_margin"] = *r.worst_margin;
    if (cfg.solver == "arcog_practical") e["rebases"] = r.rebases;
    seeds.push_back(e);
  }
  j["seeds"] = seeds;

  const std::vector<double> mean = seed_mean(runs);
  const long kmax = static_cast<long>(mean.size()) - 1;
  json checks = json::object();
  // surrogate for the almost-sure statements, labeled as such
  checks["trend_surrogate"] = {{"decreasing_seeds", decreasing}, {"seeds", runs.size()}};
  if (kmax >= 20) {
    const long lo = std::max(1L, kmax / 100);
    bool positive = true;
    for (long k = lo; k <= kmax; ++k) positive = positive && mean[static_cast<std::size_t>(k)] > 0.0;
    if (positive) {
      const RateFit f = fit_rate_slope(mean, lo, kmax);
      checks["rate_fit"] = {{"k_lo", lo}, {"k_hi", kmax}, {"slope", f.slope}, {"rms_residual", f.residual}};
    }
  }
  json plot;
  const double kp1 = static_cast<double>(kmax + 1);
  if (cfg.solver == "rcog" || cfg.solver == "fedog") {
    double scale = 0.0;
    if (cfg.solver == "rcog" && s.xs) scale = 5.0 * s.d0 / (2.0 * s.rcog.psi);
    if (cfg.solver == "fedog" && s.split->solution) {
      const double gap = 1.0 - s.lipschitz * s.lambda;
      scale = 5.0 * s.d0 / (2.0 * s.rcog.psi * gap * gap);
    }
    if (scale > 0.0) {
      double sum = 0;
      for (double v : mean) sum += v;
      const double value = sum / kp1;
      const bool sat = value <= scale / kp1;
      ok = ok && sat;
      checks["ergodic_bound"] = {{"value", value}, {"bound", scale / kp1}, {"satisfied", sat}};
      plot["rcog_ergodic_scale"] = scale;
    }
  }
  if (s.constants && s.d0 > 0.0) {
    const double scale = cfg.solver == "acfeddr" ? s.fed_beta * s.fed_beta * s.d0 : s.d0;
    double worst = 0.0;
    long at = 0;
    for (long k = 0; k <= kmax; ++k) {
      const double r = mean[static_cast<std::size_t>(k)] / (scale * s.constants->envelope(k));
      if (r > worst) {
        worst = r;
        at = k;
      }
    }
    const bool sat = worst <= 1.0;
    ok = ok && sat;
    checks["envelope"] = {{"worst_ratio", worst}, {"at_k", at}, {"satisfied", sat}};
    plot["arcog_envelope"] = {{"C0", s.constants->c0}, {"C2", s.constants->c2}, {"omega", s.constants->omega},
                              {"nu", s.constants->nu}, {"scale", scale}};
  }
  if (cfg.diagnostics.summable_checks && s.constants && !runs.front().summable.res_sq.empty()) {
    SummableInputs m = runs.front().summable;
    std::size_t len = m.res_sq.size();
    for (const auto& r : runs) len = std::min(len, r.summable.res_sq.size());
    for (auto* v : {&m.combo_sq, &m.step_sq, &m.res_sq, &m.block_diff}) v->assign(len, 0.0);
    for (const auto& r : runs) {
      for (std::size_t k = 0; k < len; ++k) {
        m.combo_sq[k] += r.summable.combo_sq[k] / static_cast<double>(runs.size());
        m.step_sq[k] += r.summable.step_sq[k] / static_cast<double>(runs.size());
        m.res_sq[k] += r.summable.res_sq[k] / static_cast<double>(runs.size());
        m.block_diff[k] += r.summable.block_diff[k] / static_cast<double>(runs.size());
      }
    }
    json arr = json::array();
    for (const auto& e : summable_checks(m, *s.constants, s.d0)) {
      arr.push_back({{"name", e.name}, {"partial_sum", e.partial_sum}, {"bound", e.bound}, {"satisfied", e.passed}});
      ok = ok && e.passed;
    }
    checks["summable"] = arr;
  }
  bool margins_ok = true;
  double worst_margin = -std::numeric_limits<double>::infinity();
  bool any_margin = false;
  for (const auto& r : runs) {
    if (!r.worst_margin) continue;
    any_margin = true;
    worst_margin = std::max(worst_margin, *r.worst_margin);
  }
  if (any_margin) {
    margins_ok = worst_margin <= 1e-12;
    ok = ok && margins_ok;
    checks["descent_margin"] = {{"worst_scaled", worst_margin}, {"satisfied", margins_ok}};
  }
  j["checks"] = checks;
  j["plot_bounds"] = plot.is_null() ? json::object() : plot;
  j["bounds_satisfied"] = ok;
  return j;
}

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const std::string& config_dir, std::size_t threads) {
  const auto t0 = Clock::now();
  const Setup setup = prepare(cfg, config_dir);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  std::vector<SeedOutcome> runs(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < cfg.seeds.size();) {
      try {
        runs[j] = cfg.federated() ? run_federated_seed(cfg, setup, cfg.seeds[j], dir)
                                  : run_block_seed(cfg, setup, cfg.seeds[j], dir);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(threads, cfg.seeds.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunResult res;
  res.config_hash = setup.hash;
  res.output_dir = dir.string();
  for (const auto& r : runs) res.traces.push_back((dir / r.trace).string());
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  json summary = summarize(cfg, setup, runs, wall, res.bounds_satisfied);
  summary["config"] = json::parse(serialize_run_config(cfg));
  res.summary_json = summary.dump(2) + "\n";
  res.summary_path = (dir / "summary.json").string();
  std::ofstream(res.summary_path) << res.summary_json;
  return res;
}

}  // namespace blocksolve::app
