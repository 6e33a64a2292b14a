#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "blocksolve/diagnostics.hpp"
#include "blocksolve/instances.hpp"

using namespace blocksolve;

namespace {

OperatorPtr scalar_identity() {
  auto part = std::make_shared<const BlockPartition>(BlockPartition::uniform(1, 1));
  auto g = std::make_shared<LinearOperator>(part, Matrix::Identity(1, 1), Vector::Zero(1));
  g->mutable_certificates().solution = Vector::Zero(1);
  return g;
}

}  // namespace

// ---------------------------------------------------------------- exact expectation

TEST(ExactExpectation, ConstantFunctional) {
  auto g = random_monotone_linear(4, 2, 1);
  auto dist = BlockDistribution({0.1, 0.2, 0.3, 0.4});
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  Vector x = Vector::Ones(8);
  const double e = exact_conditional_rcog(x, x, *g, p, dist, [](const Vector&, const Vector&) { return 3.25; });
  EXPECT_NEAR(e, 3.25, 1e-15);
}

TEST(ExactExpectation, SingleBlockIsDeterministic) {
  auto g = scalar_identity();
  RcogParams p;
  p.omega = 1;
  p.eta = 0.3;
  p.gamma = 0.2;
  Vector x = Vector::Constant(1, 2.0), xp = Vector::Constant(1, 1.0);
  auto f = [](const Vector& next, const Vector&) { return next(0) * next(0); };
  const double step = 2.0 - (0.3 * 2.0 - 0.2 * 1.0);
  EXPECT_DOUBLE_EQ(exact_conditional_rcog(x, xp, *g, p, BlockDistribution::uniform(1), f), step * step);
}

TEST(ExactExpectation, CapEnforced) {
  auto dist = BlockDistribution::uniform(70);
  EXPECT_THROW(exact_conditional_step([](std::size_t) { return Vector::Zero(1); }, Vector::Zero(1), dist,
                                      [](const Vector&, const Vector&) { return 0.0; }),
               std::invalid_argument);
}

TEST(ExactExpectation, MatchesMonteCarlo) {
  auto g = random_monotone_linear(4, 2, 3);
  auto dist = BlockDistribution({0.1, 0.2, 0.3, 0.4});
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  std::mt19937_64 rng(4);
  const Vector x = gaussian_vector(rng, 8), xp = gaussian_vector(rng, 8);
  const Vector xs = g->solution();
  const Vector shift = p.omega * p.gamma * (*g)(x) - xs;
  auto f = [&](const Vector& next, const Vector& cur) {
    return (next + shift).squaredNorm() + (next - cur).squaredNorm();
  };
  const double exact = exact_conditional_rcog(x, xp, *g, p, dist, f);
  IndexStream idx(5, dist);
  const int m = 1000000;
  double s = 0, s2 = 0;
  for (int t = 0; t < m; ++t) {
    const double v = f(rcog_step(x, xp, *g, p, dist, idx.next()), x);
    s += v;
    s2 += v * v;
  }
  const double mean = s / m;
  const double sd = std::sqrt(std::max(0.0, s2 / m - mean * mean) / m);
  EXPECT_LE(std::abs(mean - exact), 4 * sd + 1e-12);
}

// ---------------------------------------------------------------- descent margins

TEST(RcogMargin, ZeroAtFixedPoint) {
  auto g = random_monotone_linear(4, 2, 6);
  auto dist = BlockDistribution::uniform(4);
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  const Vector xs = g->solution();
  EXPECT_NEAR(rcog_descent_margin(xs, xs, *g, p, dist, xs).margin, 0.0, 1e-14);
}

TEST(RcogMargin, ScalarOptimisticGradient) {
  auto g = scalar_identity();
  auto dist = BlockDistribution::uniform(1);
  RcogParams p;
  p.omega = 1;
  p.gamma = 0.25;
  p.eta = 0.3;
  p.psi = rcog_psi(p, 1.0);
  Vector x = Vector::Constant(1, 1.0);
  EXPECT_LE(rcog_descent_margin(x, x, *g, p, dist, Vector::Zero(1)).margin, 0.0);
}

TEST(RcogMargin, HoldsAlongMonotoneRun) {
  auto g = random_monotone_linear(4, 3, 21);
  auto dist = BlockDistribution::uniform(4);
  auto p = derive_rcog_params(1.0, 0.0, g->certificates().lipschitz, dist);
  std::mt19937_64 rng(1);
  RcogSolver s(g, p, dist, gaussian_vector(rng, 12));
  IndexStream idx(2, dist);
  for (int k = 0; k < 500; ++k) {
    auto m = rcog_descent_margin(s.current(), s.previous(), *g, p, dist, g->solution());
    ASSERT_LE(m.margin, 1e-12 * (1 + m.lyapunov)) << "k = " << k;
    s.step(idx.next());
  }
}

TEST(ArcogMargin, ZeroAtFixedPoint) {
  auto g = random_separable_cocoercive(4, 2, 2);
  auto dist = BlockDistribution::uniform(4);
  auto beta = default_beta(g->cocoercivity());
  const Vector xs = g->solution();
  auto m = arcog_descent_margin(xs, xs, *g, ArcogSchedule(4), default_arcog_omega(beta, dist), beta, dist, xs, 3);
  EXPECT_NEAR(m.margin, 0.0, 1e-14);
}

TEST(ArcogMargin, HoldsAlongSeparableRun) {
  auto g = random_separable_cocoercive(8, 3, 5);
  auto dist = BlockDistribution::uniform(8);
  auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  ArcogSchedule sched(4);
  ArcogDirectSolver s(g, sched, omega, dist, Vector::Zero(24));
  IndexStream idx(8, dist);
  for (long k = 0; k < 500; ++k) {
    auto m = arcog_descent_margin(s.current(), s.previous(), *g, sched, omega, beta, dist, g->solution(), k);
    ASSERT_LE(m.margin, 1e-12 * (1 + m.lyapunov)) << "k = " << k;
    s.step(idx.next());
  }
}

TEST(ArcogMargin, InitialLyapunovBound) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = random_separable_cocoercive(6, 2, seed, Spectrum::Wide);
    auto dist = BlockDistribution::uniform(6);
    auto beta = default_beta(g->cocoercivity());
    const double omega = default_arcog_omega(beta, dist);
    auto c = arcog_constants(4, omega, beta, g->cocoercivity(), dist);
    std::mt19937_64 rng(seed);
    const Vector x0 = gaussian_vector(rng, 12);
    const double p0 = lyapunov_arcog(x0, x0, *g, ArcogSchedule(4), omega, beta, g->solution(), 0).value;
    EXPECT_LE(p0, 2 * (1 + omega * c.lambda0_bar) * (x0 - g->solution()).squaredNorm());
  }
}

// ---------------------------------------------------------------- metrics and fits

TEST(ResidualMetrics, AtRoot) {
  auto g = random_monotone_linear(2, 2, 1);
  const Vector xs = g->solution();
  auto r = residual_metrics(xs, Vector::Zero(4), *g, xs);
  EXPECT_LT(r.res_sq, 1e-28);
  EXPECT_EQ(*r.dist_sq, 0.0);
}

TEST(ResidualMetrics, Euclidean) {
  auto part = std::make_shared<const BlockPartition>(BlockPartition::uniform(1, 2));
  LinearOperator g(part, Matrix::Identity(2, 2), Vector::Zero(2));
  Vector x(2), xp(2);
  x << 3, 4;
  xp << 3, 3;
  auto r = residual_metrics(x, xp, g, Vector::Zero(2));
  EXPECT_DOUBLE_EQ(r.res_sq, 25.0);
  EXPECT_DOUBLE_EQ(r.step_sq, 1.0);
  EXPECT_DOUBLE_EQ(*r.dist_sq, 25.0);
  EXPECT_FALSE(residual_metrics(x, xp, g).dist_sq.has_value());
}

TEST(ResidualMetrics, MatchesRecomputation) {
  auto g = random_monotone_linear(3, 2, 4);
  auto& lin = dynamic_cast<const LinearOperator&>(*g);
  std::mt19937_64 rng(3);
  const Vector x = gaussian_vector(rng, 6), xp = gaussian_vector(rng, 6);
  auto r = residual_metrics(x, xp, *g, g->solution());
  double res = 0;
  for (int a = 0; a < 6; ++a) {
    double v = -lin.offset()(a);
    for (int b = 0; b < 6; ++b) v += lin.matrix()(a, b) * x(b);
    res += v * v;
  }
  EXPECT_NEAR(r.res_sq, res, 1e-12 * (1 + res));
}

TEST(RateFit, ExactPowerLaw) {
  std::vector<double> y(1001);
  for (std::size_t k = 1; k < y.size(); ++k) y[k] = 1.0 / (static_cast<double>(k) * static_cast<double>(k));
  EXPECT_NEAR(fit_rate_slope(y, 1, 1000).slope, -2.0, 1e-6);
}

TEST(RateFit, Constant) {
  std::vector<double> y(200, 4.5);
  EXPECT_NEAR(fit_rate_slope(y, 10, 199).slope, 0.0, 1e-9);
}

TEST(RateFit, NoisyHarmonic) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(2001);
  for (std::size_t k = 1; k < y.size(); ++k) y[k] = std::abs(1.0 / static_cast<double>(k) + 1e-3 * noise(rng) / static_cast<double>(k));
  const double s = fit_rate_slope(y, 1, 2000).slope;
  EXPECT_GE(s, -1.1);
  EXPECT_LE(s, -0.9);
}

TEST(RateFit, RejectsNonpositive) {
  std::vector<double> y(10, 1.0);
  y[5] = 0.0;
  EXPECT_THROW(fit_rate_slope(y, 1, 9), std::invalid_argument);
  EXPECT_THROW(fit_rate_slope(y, 0, 4), std::invalid_argument);
}

// ---------------------------------------------------------------- summable bounds

namespace {

SummableInputs arcog_sequences(const OperatorPtr& g, const BlockDistribution& dist, const std::vector<double>& beta,
                               double omega, const Vector& x0, long steps, std::uint64_t seed) {
  ArcogSchedule sched(4);
  ArcogDirectSolver s(g, sched, omega, dist, x0);
  IndexStream idx(seed, dist);
  SummableInputs in;
  const auto& part = g->partition();
  Vector gprev = (*g)(x0);
  for (long k = 0; k <= steps; ++k) {
    const Vector x = s.current();
    const Vector gx = (*g)(x);
    const auto st = sched.at(k);
    in.combo_sq.push_back((st.eta * gx - st.gamma * gprev).squaredNorm());
    in.step_sq.push_back((x - s.previous()).squaredNorm());
    in.res_sq.push_back(gx.squaredNorm());
    double bd = 0;
    for (std::size_t i = 0; i < part.num_blocks(); ++i) bd += beta[i] * (part.block(gx, i) - part.block(gprev, i)).squaredNorm();
    in.block_diff.push_back(bd);
    gprev = gx;
    if (k < steps) s.step(idx.next());
  }
  return in;
}

}  // namespace

TEST(Summable, ZeroAtSolution) {
  auto g = random_separable_cocoercive(4, 2, 1);
  auto dist = BlockDistribution::uniform(4);
  auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  auto in = arcog_sequences(g, dist, g->cocoercivity(), omega, g->solution(), 200, 1);
  auto c = arcog_constants(4, omega, beta, g->cocoercivity(), dist);
  for (const auto& e : summable_checks(in, c, 0.0)) {
    EXPECT_LT(e.partial_sum, 1e-20) << e.name;
    EXPECT_TRUE(e.passed || e.partial_sum <= 1e-20);
  }
}

TEST(Summable, BoundsHoldOnSeparableRun) {
  auto g = random_separable_cocoercive(8, 3, 9);
  auto dist = BlockDistribution::uniform(8);
  auto beta = default_beta(g->cocoercivity());
  const double omega = default_arcog_omega(beta, dist);
  auto c = arcog_constants(4, omega, beta, g->cocoercivity(), dist);
  const Vector x0 = Vector::Zero(24);
  const double d0 = (x0 - g->solution()).squaredNorm();
  const int seeds = 4;
  SummableInputs mean;
  for (int s = 0; s < seeds; ++s) {
    auto in = arcog_sequences(g, dist, g->cocoercivity(), omega, x0, 10000, 100 + s);
    if (s == 0) {
      mean = in;
      continue;
    }
    for (std::size_t k = 0; k < in.res_sq.size(); ++k) {
      mean.combo_sq[k] += in.combo_sq[k];
      mean.step_sq[k] += in.step_sq[k];
      mean.res_sq[k] += in.res_sq[k];
      mean.block_diff[k] += in.block_diff[k];
    }
  }
  for (auto* v : {&mean.combo_sq, &mean.step_sq, &mean.res_sq, &mean.block_diff})
    for (auto& e : *v) e /= seeds;
  for (const auto& e : summable_checks(mean, c, d0)) EXPECT_TRUE(e.passed) << e.name << " " << e.partial_sum << " > " << e.bound;
  std::vector<double> scaled = mean.res_sq;
  EXPECT_TRUE(trend_surrogate(scaled, 4).decreasing);
}

TEST(TrendSurrogate, Decreasing) {
  std::vector<double> y(100);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = 1.0 / ((k + 1.0) * (k + 1.0));
  auto t = trend_surrogate(y, 4);
  EXPECT_TRUE(t.decreasing);
  EXPECT_LT(t.last_decile, t.first_decile);
  std::vector<double> flat(100, 1.0);
  EXPECT_FALSE(trend_surrogate(flat, 4).decreasing);
}
