#pragma once

#include <optional>

#include "mpsteer/cd.hpp"
#include "mpsteer/evolve.hpp"

namespace mpsteer {

enum class Method { Leakage, Rescaled, TraceCd, GsCd };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Leakage: return "leakage";
    case Method::Rescaled: return "rescaled";
    case Method::TraceCd: return "trace-cd";
    case Method::GsCd: return "gs-cd";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::Leakage, Method::Rescaled, Method::TraceCd, Method::GsCd})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

// What is being steered: a curve on a manifold, the available controls, and (for CD) a parent family.
struct SteeringProblem {
  const Manifold* manifold = nullptr;
  Trajectory trajectory;
  ControlSet controls;
  const ParentFamily* parent = nullptr;
  bool constrained_trace = false;
};

struct SteeringSample {
  double t = 0.0;
  RealVector c;
  double leakage = 0.0;   // delta^2 per site
  double rescaled = 0.0;  // Delta^2
};

struct SteeringSolution {
  std::vector<std::string> labels;
  std::vector<SteeringSample> samples;

  ControlSchedule schedule() const {
    ControlSchedule s;
    for (const auto& p : samples) {
      s.times.push_back(p.t);
      s.amplitudes.push_back(p.c);
    }
    return s;
  }
};

inline SteeringSample steer_at(const SteeringProblem& p, Method method, double t) {
  require(p.manifold != nullptr, ErrorKind::InvalidArgument, "steering problem without a manifold");
  const Manifold& m = *p.manifold;
  const Params x = p.trajectory.point(t);
  const Params v = p.trajectory.velocity(t);
  const UniformMPS psi = m.mps(x);
  const auto o = build_transfer_objects(psi);
  const auto q = leakage_quadratic(o, blocked_tangent(o, psi, m.tangent(x, v)), p.controls);
  SteeringSample s;
  s.t = t;
  switch (method) {
    case Method::Leakage: s.c = optimal_controls(q); break;
    case Method::Rescaled: s.c = rescale_to_exact_projection(q, optimal_controls(q)); break;
    case Method::TraceCd:
    case Method::GsCd: {
      require(p.parent != nullptr, ErrorKind::InvalidArgument, "counterdiabatic methods need a parent family");
      const auto h = p.parent->at(x).density;
      const auto dh = p.parent->derivative(x, v);
      const CdCost cost = method == Method::TraceCd ? trace_cd_cost(h, dh, p.controls, p.constrained_trace)
                                                    : gs_cd_cost(psi, h, dh, p.controls);
      s.c = cost.minimizer();
      break;
    }
  }
  s.leakage = leakage(q, s.c);
  s.rescaled = q.K > 1e-14 ? relative_leakage(q, s.c) : 0.0;
  return s;
}

// Controls at the midpoints of `intervals` equal pieces of the trajectory; endpoints, where the
// parent family of the circle is undefined, are never sampled.
inline SteeringSolution steer(const SteeringProblem& p, Method method, int intervals, int jobs = 1) {
  require(intervals >= 1, ErrorKind::InvalidArgument, "need at least one sampling interval");
  SteeringSolution out;
  out.labels = p.controls.labels;
  const double t0 = p.trajectory.t0, t1 = p.trajectory.t1;
  if (!(t1 > t0)) return out;
  const double h = (t1 - t0) / intervals;
  out.samples.resize(static_cast<std::size_t>(intervals));
  parallel_for(intervals, jobs, [&](int k) {
    out.samples[static_cast<std::size_t>(k)] = steer_at(p, method, t0 + (k + 0.5) * h);
  });
  return out;
}

// iTEBD along the steered protocol, with the fidelity taken against the trajectory itself.
inline std::vector<EvolutionRecord> evolve_along(const SteeringProblem& p, const ControlSchedule& schedule,
                                                 const EvolutionOptions& opt) {
  const Manifold& m = *p.manifold;
  const auto& tr = p.trajectory;
  const double t0 = tr.t0;
  auto target = [&](double t) { return m.mps(tr.point(std::min(t0 + t, tr.t1))); };
  const Protocol protocol{p.controls, [&schedule, t0](double t) { return schedule.at(t0 + t); }};
  auto rec = run_protocol(m.mps(tr.point(t0)), protocol, target, tr.t1 - t0, opt);
  for (auto& r : rec) r.t += t0;
  return rec;
}

}  // namespace mpsteer
