#include "blocksolve/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "blocksolve/errors.hpp"

namespace blocksolve {

LyapunovRcog lyapunov_rcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                           const RcogParams& prm, const Vector& xs,
                           const std::optional<WeightVector>& sigma) {
  const Vector gp = g(x_prev);
  LyapunovRcog l;
  l.anchor = (x_cur + (prm.omega * prm.gamma) * gp - xs).squaredNorm();
  const Vector dx = x_cur - x_prev;
  if (sigma) {
    l.step = weighted_norm_sq(BlockVector(g.partition_ptr(), dx), *sigma);
  } else {
    l.step = dx.squaredNorm();
  }
  l.value = l.anchor + l.step;
  return l;
}

namespace {

double coupling_term(const Vector& gx, const Vector& x, const Vector& xs, const BlockPartition& part,
                     const std::vector<double>& beta) {
  double s = gx.dot(x - xs);
  for (std::size_t i = 0; i < part.num_blocks(); ++i) s -= beta[i] * part.block(gx, i).squaredNorm();
  return s;
}

}  // namespace

LyapunovArcog lyapunov_arcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                             const ArcogSchedule& schedule, double omega,
                             const std::vector<double>& beta, const Vector& xs, long k) {
  if (beta.size() != g.num_blocks()) throw DimensionError("one beta per block expected");
  const ArcogStep sk = schedule.at(k);
  const ArcogStep sp = schedule.at(k - 1);
  const Vector gp = g(x_prev);
  LyapunovArcog l;
  l.coupling = 2.0 * omega * sk.t * sp.eta * coupling_term(gp, x_prev, xs, g.partition(), beta);
  l.momentum = (x_prev - xs + sk.t * (x_cur - x_prev)).squaredNorm();
  l.anchor = (x_prev - xs).squaredNorm();
  l.value = l.coupling + l.momentum + l.anchor;
  return l;
}

double exact_conditional_step(const BlockStepper& step, const Vector& x_cur,
                              const BlockDistribution& dist, const StepFunctional& f,
                              std::size_t cap) {
  if (dist.size() > cap) {
    throw std::invalid_argument("exact expectation enumerates " + std::to_string(dist.size()) +
                                " blocks, above the cap of " + std::to_string(cap));
  }
  double e = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) e += dist.prob(i) * f(step(i), x_cur);
  return e;
}

double exact_conditional_rcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                              const RcogParams& prm, const BlockDistribution& dist,
                              const StepFunctional& f, std::size_t cap) {
  return exact_conditional_step(
      [&](std::size_t i) { return rcog_step(x_cur, x_prev, g, prm, dist, i); }, x_cur, dist, f, cap);
}

double exact_conditional_arcog(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                               const ArcogSchedule& schedule, double omega,
                               const BlockDistribution& dist, long k, const StepFunctional& f,
                               std::size_t cap) {
  const ArcogCoefficients coef = schedule.at(k).coefficients();
  return exact_conditional_step(
      [&](std::size_t i) { return arcog_step_direct(x_cur, x_prev, g, coef, omega, dist, i); }, x_cur,
      dist, f, cap);
}

DescentMargin rcog_descent_margin(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                                  const RcogParams& prm, const BlockDistribution& dist,
                                  const Vector& xs) {
  const Vector gx = g(x_cur);
  const Vector shift = (prm.omega * prm.gamma) * gx - xs;
  DescentMargin m;
  m.lyapunov = lyapunov_rcog(x_cur, x_prev, g, prm, xs).value;
  m.expected_next = exact_conditional_rcog(
      x_cur, x_prev, g, prm, dist,
      [&](const Vector& next, const Vector& cur) {
        return (next + shift).squaredNorm() + (next - cur).squaredNorm();
      });
  m.margin = m.expected_next - m.lyapunov + prm.psi * gx.squaredNorm();
  return m;
}

DescentMargin arcog_descent_margin(const Vector& x_cur, const Vector& x_prev,
                                   const BlockOperator& g, const ArcogSchedule& schedule,
                                   double omega, const std::vector<double>& beta,
                                   const BlockDistribution& dist, const Vector& xs, long k) {
  if (beta.size() != g.num_blocks()) throw DimensionError("one beta per block expected");
  const ArcogStep sn = schedule.at(k + 1);
  const ArcogStep sk = schedule.at(k);
  const Vector gx = g(x_cur);
  const double coupling = 2.0 * omega * sn.t * sk.eta * coupling_term(gx, x_cur, xs, g.partition(), beta);
  const double anchor = (x_cur - xs).squaredNorm();
  const Vector base = x_cur - xs;
  DescentMargin m;
  m.lyapunov = lyapunov_arcog(x_cur, x_prev, g, schedule, omega, beta, xs, k).value;
  m.expected_next = exact_conditional_arcog(
      x_cur, x_prev, g, schedule, omega, dist, k,
      [&](const Vector& next, const Vector& cur) {
        return coupling + (base + sn.t * (next - cur)).squaredNorm() + anchor;
      });
  m.margin = m.expected_next - m.lyapunov;
  return m;
}

ResidualMetrics residual_metrics(const Vector& x_cur, const Vector& x_prev, const BlockOperator& g,
                                 const std::optional<Vector>& xs) {
  ResidualMetrics r;
  r.res_sq = g(x_cur).squaredNorm();
  r.step_sq = (x_cur - x_prev).squaredNorm();
  if (xs) r.dist_sq = (x_cur - *xs).squaredNorm();
  return r;
}

RateFit fit_rate_slope(const std::vector<double>& y, long k_lo, long k_hi) {
  if (k_lo < 1) throw std::invalid_argument("rate fit window must start at k >= 1");
  if (k_hi <= k_lo) throw std::invalid_argument("rate fit window needs at least two points");
  if (static_cast<std::size_t>(k_hi) >= y.size()) throw std::invalid_argument("rate fit window exceeds the trace");
  const auto m = static_cast<double>(k_hi - k_lo + 1);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double v = y[static_cast<std::size_t>(k)];
    if (!(v > 0.0)) throw std::invalid_argument("rate fit needs positive values (k = " + std::to_string(k) + ")");
    const double lx = std::log(static_cast<double>(k));
    const double ly = std::log(v);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  RateFit f;
  f.k_lo = k_lo;
  f.k_hi = k_hi;
  const double den = m * sxx - sx * sx;
  f.slope = (m * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / m;
  double ss = 0.0;
  for (long k = k_lo; k <= k_hi; ++k) {
    const double e = std::log(y[static_cast<std::size_t>(k)]) -
                     (f.intercept + f.slope * std::log(static_cast<double>(k)));
    ss += e * e;
  }
  f.residual = std::sqrt(ss / m);
  return f;
}

std::vector<SummableEntry> summable_checks(const SummableInputs& in, const ArcogConstants& c,
                                           double d0, double slack) {
  const double nu = c.nu;
  const double a = 1.0 + c.omega * c.lambda0_bar;
  auto weighted = [](const std::vector<double>& v, long k0, auto weight) {
    double s = 0.0;
    for (std::size_t k = static_cast<std::size_t>(k0); k < v.size(); ++k) s += weight(static_cast<double>(k)) * v[k];
    return s;
  };
  std::vector<SummableEntry> out(4);
  out[0].name = "combo_residual";
  out[0].partial_sum = weighted(in.combo_sq, 0, [&](double k) { return (k + 2 * nu + 2) * (k + 2 * nu + 2); });
  out[0].bound = 2.0 * nu * nu * a / (c.omega * c.lambda1) * d0;
  out[1].name = "step";
  out[1].partial_sum = weighted(in.step_sq, 0, [&](double k) { return k + nu + 1; });
  out[1].bound = nu * a * d0;
  out[2].name = "residual";
  out[2].partial_sum = weighted(in.res_sq, 0, [&](double k) { return k + nu + 1; });
  out[2].bound = c.c1 * d0;
  out[3].name = "block_difference";
  out[3].partial_sum = weighted(in.block_diff, 1, [](double k) { return (k + 1) * (k + 1); });
  out[3].bound = c.c2 * d0;
  for (auto& e : out) e.passed = e.partial_sum <= e.bound * slack;
  return out;
}

TrendSurrogate trend_surrogate(const std::vector<double>& y, double nu) {
  TrendSurrogate t;
  const std::size_t n = y.size();
  const std::size_t d = std::max<std::size_t>(1, n / 10);
  if (n < 2) return t;
  for (std::size_t k = 0; k < d; ++k) t.first_decile += (static_cast<double>(k) + nu) * y[k];
  for (std::size_t k = n - d; k < n; ++k) t.last_decile += (static_cast<double>(k) + nu) * y[k];
  t.first_decile /= static_cast<double>(d);
  t.last_decile /= static_cast<double>(d);
  t.decreasing = t.last_decile < t.first_decile;
  return t;
}

}  // namespace blocksolve
