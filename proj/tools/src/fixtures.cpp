#include "blocksolve/app/fixtures.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include <blocksolve/instances.hpp>
#include <blocksolve/problem_io.hpp>
#include <blocksolve/solvers.hpp>
#include <blocksolve/splitting.hpp>

#include "blocksolve/app/checks.hpp"
#include "blocksolve/app/oracles.hpp"

namespace blocksolve::app {

using nlohmann::json;

namespace {

std::vector<double> vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix square(const json& j, Eigen::Index p) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != p * p) throw std::runtime_error("matrix has wrong size");
  Matrix m(p, p);
  for (Eigen::Index r = 0; r < p; ++r)
    for (Eigen::Index c = 0; c < p; ++c) m(r, c) = v[static_cast<std::size_t>(r * p + c)];
  return m;
}

std::vector<double> flat(const Matrix& m) {
  std::vector<double> out;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

json consensus_fixture() {
  std::mt19937_64 rng(606);
  const std::size_t n = 5, p = 6;
  const Matrix q = random_psd(rng, p, Spectrum::Uniform);
  const Vector b = gaussian_vector(rng, p);
  json cases = json::array();
  for (double beta : {0.25, 1.0, 3.0}) {
    const Vector u = gaussian_vector(rng, n * p);
    cases.push_back({{"beta", beta}, {"u", vec(u)}, {"expected", vec(brute_force_consensus(u, n, beta, q, b))}});
  }
  return {{"n", n}, {"p", p}, {"q", flat(q)}, {"b", vec(b)}, {"tol", 1e-8}, {"cases", cases}};
}

json affine_fixture() {
  std::mt19937_64 rng(707);
  const std::size_t p = 4;
  const Matrix s = gaussian_matrix(rng, p, p);
  const Matrix m = random_psd(rng, p, Spectrum::Uniform) + 0.5 * (s - s.transpose());
  const Vector b = gaussian_vector(rng, p);
  json cases = json::array();
  for (double lambda : {0.1, 1.0, 10.0}) {
    const Vector v = gaussian_vector(rng, p);
    cases.push_back({{"lambda", lambda}, {"v", vec(v)},
                     {"expected", vec(brute_force_affine_resolvent(m, b, lambda, v))}});
  }
  return {{"p", p}, {"m", flat(m)}, {"b", vec(b)}, {"tol", 1e-10}, {"cases", cases}};
}

// Hand-computed values below.

json prox_fixture() {
  json cases = json::array();
  cases.push_back({{"kind", "soft_threshold"}, {"mu", 1.0}, {"lambda", 1.0},
                   {"v", {3.0, -0.5, 1.0}}, {"expected", {2.0, 0.0, 0.0}}});
  cases.push_back({{"kind", "soft_threshold"}, {"mu", 0.5}, {"lambda", 2.0},
                   {"v", {-4.0, 0.25, 1.5}}, {"expected", {-3.0, 0.0, 0.5}}});
  cases.push_back({{"kind", "box"}, {"lo", -1.0}, {"hi", 1.0}, {"lambda", 7.0},
                   {"v", {2.0, -3.0, 0.5}}, {"expected", {1.0, -1.0, 0.5}}});
  return {{"tol", 1e-15}, {"cases", cases}};
}

json rcog_fixture() {
  json cases = json::array();
  // n = 4, L_i = 1: rho_bar = 1/4, gamma = 1/8, eta = 17/128, psi = 1/1024.
  cases.push_back({{"omega", 1.0}, {"rho", 0.0}, {"lipschitz", {1.0, 1.0, 1.0, 1.0}},
                   {"probs", {0.25, 0.25, 0.25, 0.25}}, {"gamma", 0.125}, {"eta", 0.1328125},
                   {"psi", 0.0009765625}});
  // L = (1, 2): rho_bar = sqrt(1/2)/4, eta = 9/8 gamma.
  const double g = std::sqrt(0.5) / 8.0;
  cases.push_back({{"omega", 1.0}, {"rho", 0.0}, {"lipschitz", {1.0, 2.0}}, {"probs", {0.5, 0.5}},
                   {"gamma", g}, {"eta", 1.125 * g}, {"psi", 0.0009765625}});
  return {{"tol", 1e-12}, {"cases", cases}};
}

json arcog_fixture() {
  json cases = json::array();
  cases.push_back({{"nu", 4.0}, {"beta", {1.0, 1.0}}, {"probs", {0.5, 0.5}}, {"omega", 0.5},
                   {"c0", 96.5625}, {"c1", 3186.0}, {"c2", 1605.0}});
  cases.push_back({{"nu", 4.0}, {"beta", {0.7, 0.7, 0.7, 0.7, 0.7}}, {"probs", {0.2, 0.2, 0.2, 0.2, 0.2}},
                   {"omega", 0.14}, {"c0", 58.6308}, {"c1", 24910.5306122449}, {"c2", 3490.162285714286}});
  return {{"rel_tol", 1e-5}, {"cases", cases}};
}

json lambda_fixture() {
  json cases = json::array();
  cases.push_back({{"lipschitz", 1.0}, {"rho", 0.0}, {"lo", 0.0}, {"hi", 1.0}, {"lambda", 0.5},
                   {"fbfs_lipschitz", 3.75}});
  // 8 L rho = 1 collapses the range to a point.
  cases.push_back({{"lipschitz", 1.0}, {"rho", 0.125}, {"lo", 1.0 / 3.0}, {"hi", 1.0 / 3.0},
                   {"lambda", 1.0 / 3.0}, {"fbfs_lipschitz", 28.0 / 9.0}});
  return {{"tol", 1e-12}, {"cases", cases}};
}

json schedule_fixture() {
  json cases = json::array();
  cases.push_back({{"nu", 4.0}, {"k", 0}, {"t", 2.25}, {"theta", 0.1}, {"gamma", 0.1}, {"eta", 0.5}});
  cases.push_back({{"nu", 5.0}, {"k", 9}, {"t", 4.0}, {"theta", 2.0 / 4.2}, {"gamma", 2.0 / 4.2},
                   {"eta", 3.0 / 4.2}});
  return {{"tol", 1e-14}, {"cases", cases}};
}

json identity_fixture(bool drs) {
  json problems = json::array();
  problems.push_back({{"users", 4}, {"dim", 3}, {"seed", 31}, {"beta", 1.0}});
  problems.push_back({{"users", 6}, {"dim", 2}, {"seed", 32}, {"beta", 0.3}});
  json j = {{"tol", 1e-10}, {"problems", problems}};
  if (!drs)
    for (auto& p : j["problems"]) p.erase("beta");
  return j;
}

// ---------------------------------------------------------------- checks

using Check = double (*)(const json&);  // returns the worst error, compared against the entry's tol

double check_consensus(const json& f) {
  const std::size_t n = f.at("n"), p = f.at("p");
  const AffineMap b{square(f.at("q"), static_cast<Eigen::Index>(p)), from(f.at("b"))};
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    const Vector want = from(c.at("expected"));
    const Vector got = consensus_resolvent(from(c.at("u")), n, c.at("beta"), b).hat;
    worst = std::max(worst, (got - want).norm() / (1.0 + want.norm()));
  }
  return worst;
}

double check_affine(const json& f) {
  const Matrix m = square(f.at("m"), f.at("p").get<Eigen::Index>());
  const Vector b = from(f.at("b"));
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    const Vector want = from(c.at("expected"));
    const Resolvent r(AffineMap{m, b}, c.at("lambda"));
    worst = std::max(worst, (r(from(c.at("v"))) - want).norm() / (1.0 + want.norm()));
  }
  return worst;
}

double check_prox(const json& f) {
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    MonotoneOperator op = ZeroMap{};
    if (c.at("kind") == "soft_threshold") op = SoftThreshold{c.at("mu")};
    if (c.at("kind") == "box") op = BoxProjection{c.at("lo"), c.at("hi")};
    worst = std::max(worst, (resolvent(op, c.at("lambda"), from(c.at("v"))) - from(c.at("expected"))).norm());
  }
  return worst;
}

double check_rcog(const json& f) {
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    const BlockDistribution dist(c.at("probs").get<std::vector<double>>());
    const auto prm = derive_rcog_params(c.at("omega"), c.at("rho"), c.at("lipschitz"), dist);
    worst = std::max({worst, rel(prm.gamma, c.at("gamma")), rel(prm.eta, c.at("eta")), rel(prm.psi, c.at("psi"))});
  }
  return worst;
}

double check_arcog(const json& f) {
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    const BlockDistribution dist(c.at("probs").get<std::vector<double>>());
    const std::vector<double> beta = c.at("beta");
    const auto k = arcog_constants(c.at("nu"), c.at("omega"), beta, beta, dist);
    for (const char* key : {"c0", "c1", "c2"}) {
      const double want = c.at(key);
      const double got = key[1] == '0' ? k.c0 : key[1] == '1' ? k.c1 : k.c2;
      worst = std::max(worst, std::abs(got - want) / std::abs(want));
    }
  }
  return worst;
}

double check_lambda(const json& f) {
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    const double l = c.at("lipschitz"), rho = c.at("rho");
    const auto r = lambda_range(l, rho);
    worst = std::max({worst, std::abs(r.lo - c.at("lo").get<double>()), std::abs(r.hi - c.at("hi").get<double>()),
                      std::abs(default_lambda(l, rho) - c.at("lambda").get<double>()),
                      std::abs(fbfs_lipschitz(c.at("lambda"), l) - c.at("fbfs_lipschitz").get<double>())});
  }
  return worst;
}

double check_schedule(const json& f) {
  double worst = 0;
  for (const auto& c : f.at("cases")) {
    const auto s = ArcogSchedule(c.at("nu")).at(c.at("k"));
    worst = std::max({worst, std::abs(s.t - c.at("t").get<double>()), std::abs(s.theta - c.at("theta").get<double>()),
                      std::abs(s.gamma - c.at("gamma").get<double>()), std::abs(s.eta - c.at("eta").get<double>())});
  }
  return worst;
}

SplitProblemPtr instance(const json& p) {
  SplitInstanceOptions o;
  o.users = p.at("users");
  o.dim = p.at("dim");
  return std::make_shared<const SplitProblem>(random_split_affine(o, p.at("seed")));
}

double check_fbfs(const json& f) {
  double worst = 0;
  for (const auto& p : f.at("problems")) {
    const auto prob = instance(p);
    const FbfsOperator s(prob, default_lambda(prob->lipschitz_constant(), prob->rho));
    worst = std::max(worst, s(replicate(*prob->solution, prob->num_users())).norm());
  }
  return worst;
}

double check_drs(const json& f) {
  double worst = 0;
  for (const auto& p : f.at("problems")) {
    const auto prob = instance(p);
    const double beta = p.at("beta");
    const DrsOperator g(prob, beta);
    const Vector us = drs_solution(*prob, beta);
    worst = std::max(worst, g(us).norm());
    // The consensus point of u* is the solution of the split problem.
    worst = std::max(worst, (g.consensus_point(us) - *prob->solution).norm());
  }
  return worst;
}

struct Entry {
  const char* name;
  Check check;
};

constexpr Entry kEntries[] = {
    {"consensus_resolvent", check_consensus}, {"affine_resolvent", check_affine}, {"prox", check_prox},
    {"rcog_params", check_rcog},              {"arcog_constants", check_arcog},   {"lambda_range", check_lambda},
    {"schedule", check_schedule},             {"fbfs_identity", check_fbfs},      {"drs_identity", check_drs},
};

}  // namespace

std::string write_fixtures(const std::string& dir) {
  json j;
  j["consensus_resolvent"] = consensus_fixture();
  j["affine_resolvent"] = affine_fixture();
  j["prox"] = prox_fixture();
  j["rcog_params"] = rcog_fixture();
  j["arcog_constants"] = arcog_fixture();
  j["lambda_range"] = lambda_fixture();
  j["schedule"] = schedule_fixture();
  j["fbfs_identity"] = identity_fixture(false);
  j["drs_identity"] = identity_fixture(true);
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / "lemmas.json").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
  return path;
}

std::vector<CheckResult> run_fixture_checks(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "lemmas.json").string();
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const std::exception& e) {
    CheckResult r;
    r.id = "fixture:lemmas.json";
    r.title = "load";
    r.detail = e.what();
    return {r};
  }
  std::vector<CheckResult> out;
  for (const auto& e : kEntries) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.id = std::string("fixture:") + e.name;
    r.title = "stored expected values";
    try {
      const json& f = doc.at(e.name);
      const double tol = f.contains("rel_tol") ? f.at("rel_tol").get<double>() : f.at("tol").get<double>();
      const double err = e.check(f);
      r.passed = err <= tol;
      r.detail = "worst error " + num(err) + " (<= " + num(tol) + ")";
    } catch (const std::exception& ex) {
      r.detail = std::string("error: ") + ex.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace blocksolve::app
