#include <random>

#include <benchmark/benchmark.h>

#include <blocksolve/block.hpp>
#include <blocksolve/fedsim.hpp>
#include <blocksolve/instances.hpp>
#include <blocksolve/solvers.hpp>

using namespace blocksolve;

static void BM_RcogStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto g = random_separable_cocoercive(n, 8, 1);
  const auto dist = BlockDistribution::uniform(n);
  const auto prm = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  RcogSolver s(g, prm, dist, Vector::Zero(static_cast<Eigen::Index>(8 * n)));
  IndexStream idx(1, dist);
  for (auto _ : state) s.step(idx.next());
}
BENCHMARK(BM_RcogStep)->Arg(8)->Arg(64)->Arg(512);

static void BM_ArcogDirectStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto g = random_separable_cocoercive(n, 8, 2);
  const auto dist = BlockDistribution::uniform(n);
  const double omega = default_arcog_omega(default_beta(g->cocoercivity()), dist);
  ArcogDirectSolver s(g, ArcogSchedule(4), omega, dist, Vector::Zero(static_cast<Eigen::Index>(8 * n)));
  IndexStream idx(2, dist);
  for (auto _ : state) s.step(idx.next());
}
BENCHMARK(BM_ArcogDirectStep)->Arg(8)->Arg(64)->Arg(512);

static void BM_ArcogPracticalStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto g = random_separable_cocoercive(n, 8, 3);
  const auto dist = BlockDistribution::uniform(n);
  const double omega = default_arcog_omega(default_beta(g->cocoercivity()), dist);
  ArcogPracticalSolver s(g, ArcogSchedule(4), omega, dist, Vector::Zero(static_cast<Eigen::Index>(8 * n)));
  IndexStream idx(3, dist);
  for (auto _ : state) s.step(idx.next());
}
BENCHMARK(BM_ArcogPracticalStep)->Arg(8)->Arg(64)->Arg(512);

static void BM_FedOgRound(benchmark::State& state) {
  SplitInstanceOptions o;
  o.users = static_cast<std::size_t>(state.range(0));
  o.dim = 8;
  auto prob = std::make_shared<const SplitProblem>(random_split_affine(o, 4));
  const auto dist = BlockDistribution::uniform(o.users);
  const double lam = default_lambda(prob->lipschitz_constant(), prob->rho);
  const auto prm = derive_rcog_params(
      1.0, 0.0, std::vector<double>(o.users, fbfs_lipschitz(lam, prob->lipschitz_constant())), dist);
  FedOgSimulation sim(prob, lam, prm, dist, Vector::Zero(8));
  IndexStream idx(4, dist);
  for (auto _ : state) benchmark::DoNotOptimize(sim.round(idx.next()));
}
BENCHMARK(BM_FedOgRound)->Arg(8)->Arg(64);

static void BM_AcFedDrRound(benchmark::State& state) {
  SplitInstanceOptions o;
  o.users = static_cast<std::size_t>(state.range(0));
  o.dim = 8;
  auto prob = std::make_shared<const SplitProblem>(random_split_affine(o, 5));
  const auto dist = BlockDistribution::uniform(o.users);
  AcFedDrSimulation sim(prob, 1.0, ArcogSchedule(4), dist.p_min(), dist, Vector::Zero(8));
  IndexStream idx(5, dist);
  for (auto _ : state) benchmark::DoNotOptimize(sim.round(idx.next()));
}
BENCHMARK(BM_AcFedDrRound)->Arg(8)->Arg(64);
BENCHMARK_MAIN();
