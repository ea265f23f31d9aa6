#pragma once

#include "mpsteer/protocol.hpp"

namespace mpsteer {

// ---------------------------------------------------------------------------------------------
// Integrated leakage
// ---------------------------------------------------------------------------------------------

struct IntegratedLeakage {
  double value = 0.0;           // Simpson estimate at the finer sampling
  double coarse = 0.0;          // same rule at half the samples
  double relative_change = 0.0; // |value - coarse| / |value|, 0 when both vanish
};

inline constexpr int kDefaultLeakageIntervals = 400;
inline constexpr double kLeakageRichardsonTolerance = 1e-4;

namespace detail {

inline double optimal_leakage_at(const Manifold& m, const Trajectory& tr, const ControlSet& cs, double t) {
  try {
    const auto q = leakage_quadratic(m, tr.point(t), tr.velocity(t), cs);
    return q.minimum();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateSpectrum || e.kind() == ErrorKind::SingularPoint)
      fail(ErrorKind::SingularPoint, "trajectory passes through an excluded point at t = " + std::to_string(t));
    throw;
  }
}

inline double simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size() - 1;
  double s = f.front() + f.back();
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f[i];
  return s * h / 3.0;
}

}  // namespace detail

// Integral of the per-site leakage with leakage-optimal controls at every sample, by composite Simpson
// on `intervals` (even) pieces.  The same rule on half the samples must agree to 1e-4 relative.
inline IntegratedLeakage integrated_leakage(const Manifold& m, const Trajectory& tr, const ControlSet& cs,
                                            int intervals = kDefaultLeakageIntervals, int jobs = 1) {
  require(intervals >= 4 && intervals % 4 == 0, ErrorKind::InvalidArgument,
          "integrated leakage needs a positive multiple of 4 intervals");
  IntegratedLeakage out;
  if (!(tr.t1 > tr.t0)) return out;
  const double h = (tr.t1 - tr.t0) / intervals;
  std::vector<double> f(static_cast<std::size_t>(intervals + 1));
  parallel_for(intervals + 1, jobs, [&](int k) {
    f[static_cast<std::size_t>(k)] = detail::optimal_leakage_at(m, tr, cs, tr.t0 + k * h);
  });
  std::vector<double> half;
  for (std::size_t k = 0; k < f.size(); k += 2) half.push_back(f[k]);
  out.value = detail::simpson(f, h);
  out.coarse = detail::simpson(half, 2 * h);
  const double scale = std::max(std::abs(out.value), std::abs(out.coarse));
  out.relative_change = scale > 1e-300 ? std::abs(out.value - out.coarse) / scale : 0.0;
  require(out.relative_change < kLeakageRichardsonTolerance || scale < 1e-14, ErrorKind::InvalidArgument,
          "trajectory undersampled: halving the samples changes the integrated leakage by " +
              std::to_string(out.relative_change));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Euler-Lagrange residual of S[x] = int L(x, xdot) dt with L the minimal leakage
// ---------------------------------------------------------------------------------------------

// dL/dx - d/dt dL/dxdot at time t, by central differences.  Zero on a stationary path.
inline Params euler_lagrange_residual(const Manifold& m, const Trajectory& tr, const ControlSet& cs, double t,
                                      double h = 1e-4) {
  auto lag = [&](const Params& x, const Params& v) { return leakage_quadratic(m, x, v, cs).minimum(); };
  const int n = m.dim();
  auto grad_v = [&](double s) {
    const Params x = tr.point(s), v = tr.velocity(s);
    Params g(n);
    for (int j = 0; j < n; ++j) {
      const Params e = h * Params::Unit(n, j);
      g[j] = (lag(x, v + e) - lag(x, v - e)) / (2 * h);
    }
    return g;
  };
  const Params x = tr.point(t), v = tr.velocity(t);
  Params r(n);
  for (int j = 0; j < n; ++j) {
    const Params e = h * Params::Unit(n, j);
    r[j] = (lag(x + e, v) - lag(x - e, v)) / (2 * h);
  }
  return r - (grad_v(t + h) - grad_v(t - h)) / (2 * h);
}

// ---------------------------------------------------------------------------------------------
// Deformation search
// ---------------------------------------------------------------------------------------------

enum class ObjectiveKind { FinalFidelity, IntegratedLeakage, MidpointEntanglementConstrained };

inline const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::FinalFidelity: return "final-fidelity";
    case ObjectiveKind::IntegratedLeakage: return "integrated-leakage";
    case ObjectiveKind::MidpointEntanglementConstrained: return "midpoint-entanglement-constrained";
  }
  return "?";
}

inline std::optional<ObjectiveKind> parse_objective(const std::string& s) {
  for (auto k : {ObjectiveKind::FinalFidelity, ObjectiveKind::IntegratedLeakage,
                 ObjectiveKind::MidpointEntanglementConstrained})
    if (s == to_string(k)) return k;
  return std::nullopt;
}

// The constrained kind adds penalty * max(0, S(tau/2) - entropy_cap) to the final fidelity density.
struct TrajectoryObjective {
  ObjectiveKind kind = ObjectiveKind::FinalFidelity;
  double entropy_cap = 0.0;
  double penalty = 1.0;
};

struct DeformationCandidate {
  double e2 = 0.0;
  double objective = 0.0;
  double midpoint_entropy = std::nan("");
  double final_fidelity = std::nan("");
};

struct DeformationSearch {
  double lo = -0.12, hi = 0.02;
  int grid = 8;            // coarse points, both ends included
  double tolerance = 2e-3; // final bracket width
};

struct DeformationReport {
  double e1 = 0.0;
  DeformationCandidate best;
  bool no_improvement = false;
  std::vector<DeformationCandidate> candidates;  // in evaluation order
};

using DeformationEvaluator = std::function<DeformationCandidate(double e2)>;

// Coarse grid (parallel across points) followed by golden-section refinement around the best grid point.
// A boundary minimizer, or an interior that never beats the boundary, is reported as no improvement.
inline DeformationReport minimize_deformation(const DeformationEvaluator& eval, const DeformationSearch& s,
                                              int jobs = 1) {
  require(s.hi > s.lo && s.grid >= 3 && s.tolerance > 0, ErrorKind::InvalidArgument, "invalid deformation search");
  DeformationReport rep;
  std::vector<DeformationCandidate> grid(static_cast<std::size_t>(s.grid));
  parallel_for(s.grid, jobs, [&](int k) {
    grid[static_cast<std::size_t>(k)] = eval(s.lo + (s.hi - s.lo) * k / (s.grid - 1));
  });
  rep.candidates = grid;
  std::size_t ib = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (grid[k].objective < grid[ib].objective) ib = k;

  const double step = (s.hi - s.lo) / (s.grid - 1);
  double lo = grid[ib].e2 - (ib > 0 ? step : 0.0);
  double hi = grid[ib].e2 + (ib + 1 < grid.size() ? step : 0.0);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto probe = [&](double e2) {
    rep.candidates.push_back(eval(e2));
    return rep.candidates.back();
  };
  DeformationCandidate a = probe(hi - g * (hi - lo)), b = probe(lo + g * (hi - lo));
  while (hi - lo > s.tolerance) {
    if (a.objective < b.objective) {
      hi = b.e2;
      b = a;
      a = probe(hi - g * (hi - lo));
    } else {
      lo = a.e2;
      a = b;
      b = probe(lo + g * (hi - lo));
    }
  }

  rep.best = rep.candidates.front();
  for (const auto& c : rep.candidates)
    if (c.objective < rep.best.objective) rep.best = c;
  const double edge = std::min(grid.front().objective, grid.back().objective);
  rep.no_improvement = !(rep.best.objective < edge - 1e-12 * std::max(1.0, std::abs(edge)));
  if (rep.no_improvement) rep.best = grid.front().objective <= grid.back().objective ? grid.front() : grid.back();
  return rep;
}

struct DeformationSetup {
  Schedule schedule{1.0, 0.5};
  int steering_intervals = 200;
  int leakage_intervals = kDefaultLeakageIntervals;
  EvolutionOptions evolution{32, 1e-3, 500, kFidelityCap};
};

// Objective for the PXP deformation family at fixed e1.  Integrated leakage needs no evolution;
// the other kinds run iTEBD with leakage-optimal controls.
inline DeformationEvaluator pxp_deformation_evaluator(double e1, const TrajectoryObjective& obj,
                                                      const DeformationSetup& setup) {
  return [=](double e2) {
    static const PxpManifold m;
    const ControlSet cs = pxp_controls();
    const Trajectory tr = deformed_trajectory(e1, e2, setup.schedule);
    DeformationCandidate c;
    c.e2 = e2;
    if (obj.kind == ObjectiveKind::IntegratedLeakage) {
      c.objective = integrated_leakage(m, tr, cs, setup.leakage_intervals).value;
      return c;
    }
    const SteeringProblem p{&m, tr, cs, nullptr, true};
    const auto sol = steer(p, Method::Leakage, setup.steering_intervals);
    EvolutionOptions opt = setup.evolution;
    const auto steps = std::llround(setup.schedule.tau / opt.dt);
    if (steps % 2 == 0) opt.record_every = static_cast<int>(std::max<long long>(1, steps / 2));
    const auto rec = evolve_along(p, sol.schedule(), opt);
    const double mid = 0.5 * setup.schedule.tau;
    const auto* near = &rec.front();
    for (const auto& r : rec)
      if (std::abs(r.t - mid) < std::abs(near->t - mid)) near = &r;
    c.midpoint_entropy = near->entropy1;
    c.final_fidelity = rec.back().fidelity;
    c.objective = c.final_fidelity;
    if (obj.kind == ObjectiveKind::MidpointEntanglementConstrained)
      c.objective += obj.penalty * std::max(0.0, c.midpoint_entropy - obj.entropy_cap);
    return c;
  };
}

inline DeformationReport optimize_deformation(double e1, const TrajectoryObjective& obj,
                                              const DeformationSearch& search = {},
                                              const DeformationSetup& setup = {}, int jobs = 1) {
  DeformationReport rep = minimize_deformation(pxp_deformation_evaluator(e1, obj, setup), search, jobs);
  rep.e1 = e1;
  return rep;
}

}  // namespace mpsteer
