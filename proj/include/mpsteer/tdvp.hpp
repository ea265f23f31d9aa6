#pragma once

#include "mpsteer/manifolds.hpp"

namespace mpsteer {

inline constexpr double kGramKernelCutoff = 1e-12;
inline constexpr double kGramMaxCondition = 1e10;

// Solves Re<d_j psi|d_k psi>_c xdot_k = Im<d_j psi|A|psi>_c per unit cell.
// Gram eigenvalues below 1e-12 of the largest are treated as gauge directions and dropped;
// any kept eigenvalue spread beyond the condition limit is an error.
inline Params tdvp_velocity(const Manifold& m, const OperatorDensity& h, const Params& x) {
  m.check(x);
  const UniformMPS mps = m.mps(x);
  const auto o = build_transfer_objects(mps);
  const int n = m.dim();
  std::vector<SiteTensor> b;
  for (int j = 0; j < n; ++j) b.push_back(blocked_tangent(o, mps, m.tangent(x, Params::Unit(n, j))));
  RealMatrix g(n, n);
  RealVector rhs(n);
  for (int j = 0; j < n; ++j) {
    for (int k = j; k < n; ++k) g(j, k) = g(k, j) = tangent_overlap(o, b[j], std::nullopt, b[k]).real();
    rhs[j] = tangent_overlap(o, b[j], h).imag();
  }
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(g);
  const RealVector w = es.eigenvalues();
  const double wmax = w.maxCoeff();
  require(wmax > 0.0, ErrorKind::ZeroTangent, "tangent vectors vanish");
  double wmin = wmax;
  for (Eigen::Index i = 0; i < n; ++i)
    if (w[i] > kGramKernelCutoff * wmax) wmin = std::min(wmin, w[i]);
  if (wmax / wmin > kGramMaxCondition)
    fail(ErrorKind::IllConditionedTangent, "tangent Gram matrix condition number " + std::to_string(wmax / wmin));
  return symmetric_pinv(g, kGramKernelCutoff) * rhs;
}

// Fourth-order Runge-Kutta integration of the projected flow; samples every step.
inline SampledTrajectory tdvp_flow(const Manifold& m, const OperatorDensity& h, const Params& x0, double dt,
                                   int steps) {
  require(dt > 0.0 && steps >= 1, ErrorKind::InvalidArgument, "tdvp needs a positive step and step count");
  std::vector<double> t{0.0};
  std::vector<Params> x{x0};
  std::vector<Params> v{tdvp_velocity(m, h, x0)};
  for (int k = 0; k < steps; ++k) {
    const Params& y = x.back();
    const Params k1 = v.back();
    const Params k2 = tdvp_velocity(m, h, y + 0.5 * dt * k1);
    const Params k3 = tdvp_velocity(m, h, y + 0.5 * dt * k2);
    const Params k4 = tdvp_velocity(m, h, y + dt * k3);
    const Params next = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    t.push_back(static_cast<double>(k + 1) * dt);
    x.push_back(next);
    v.push_back(tdvp_velocity(m, h, next));
  }
  return SampledTrajectory(std::move(t), std::move(x), std::move(v));
}

struct ReturnPoint {
  double t = 0.0;
  double distance = 0.0;
};

// Closest approach to the starting point after t_min, refined on the interpolant.
inline ReturnPoint closest_return(const Manifold& m, const SampledTrajectory& tr, double t_min) {
  const auto& ts = tr.times();
  const Params& x0 = tr.points().front();
  auto dist = [&](double t) { return m.distance(tr.point(t), x0); };
  std::size_t best = 0;
  double dbest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < t_min) continue;
    const double d = m.distance(tr.points()[i], x0);
    if (d < dbest) {
      dbest = d;
      best = i;
    }
  }
  require(std::isfinite(dbest), ErrorKind::InvalidArgument, "trajectory ends before t_min");
  double lo = ts[best > 0 ? best - 1 : best];
  double hi = ts[std::min(best + 1, ts.size() - 1)];
  lo = std::max(lo, t_min);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  double fa = dist(a), fb = dist(b);
  for (int it = 0; it < 80 && hi - lo > 1e-12; ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = dist(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = dist(b);
    }
  }
  const double t = 0.5 * (lo + hi);
  return {t, dist(t)};
}

}  // namespace mpsteer
