#pragma once

#include <thread>

#include "mpsteer/manifolds.hpp"
#include "mpsteer/models.hpp"

namespace mpsteer {

// delta^2(c) = 1/2 c^T D c + e^T c + K, all per site.
//   D_ij = <{A_i, A_j}>_c,  e_i = 2 Im <psi|A_i|dpsi>_c,  K = <dpsi|dpsi>_c.
struct LeakageQuadratic {
  RealMatrix D;
  RealVector e;
  double K = 0.0;

  double value(const RealVector& c) const { return 0.5 * c.dot(D * c) + e.dot(c) + K; }
  RealVector minimizer() const { return -symmetric_pinv(D, 1e-12) * e; }
  double minimum() const { return value(minimizer()); }
};

inline LeakageQuadratic leakage_quadratic(const TransferObjects& o, const SiteTensor& dpsi, const ControlSet& cs) {
  cs.validate();
  const auto n = static_cast<Eigen::Index>(cs.size());
  const double per_site = 1.0 / o.sites_per_cell;
  LeakageQuadratic q;
  q.D = RealMatrix::Zero(n, n);
  q.e = RealVector::Zero(n);
  std::vector<std::vector<Insertion>> ins;
  for (const auto& g : cs.generators) ins.push_back(cell_insertions(g, o.sites_per_cell));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      Complex s = 0.0;
      for (const auto& x : ins[static_cast<std::size_t>(i)])
        for (const auto& y : ins[static_cast<std::size_t>(j)]) s += connected_sum(o, x, y);
      q.D(i, j) = q.D(j, i) = 2.0 * s.real() * per_site;
    }
  const Insertion bra = bra_tangent_insertion(dpsi);
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex z = 0.0;
    for (const auto& y : ins[static_cast<std::size_t>(i)]) z += connected_sum(o, bra, y);
    q.e[i] = -2.0 * z.imag() * per_site;
  }
  q.K = connected_sum(o, bra, ket_tangent_insertion(dpsi)).real() * per_site;
  return q;
}

inline LeakageQuadratic leakage_quadratic(const Manifold& m, const Params& x, const Params& v, const ControlSet& cs) {
  const UniformMPS psi = m.mps(x);
  const auto o = build_transfer_objects(psi);
  return leakage_quadratic(o, blocked_tangent(o, psi, m.tangent(x, v)), cs);
}

inline RealVector optimal_controls(const LeakageQuadratic& q) { return q.minimizer(); }

inline double leakage(const LeakageQuadratic& q, const RealVector& c) { return q.value(c); }

// delta^2 / K, clipped below at zero.
inline double relative_leakage(const LeakageQuadratic& q, const RealVector& c) {
  require(q.K > 1e-14, ErrorKind::ZeroTangent, "tangent vector has zero norm");
  return std::max(0.0, q.value(c) / q.K);
}

// Closed-form minimizer for the PXP manifold with PXP controls.
inline std::pair<double, double> closed_form_pxp_controls(double t1, double t2, double v1, double v2) {
  auto num = [](double a, double b, double va, double vb) {
    const double sa = std::sin(a);
    return 2.0 * (-2 * va * (9 + 6 * std::cos(2 * a) + std::cos(4 * a)) * std::cos(b) -
                  8 * va * std::cos(2 * a) * std::cos(3 * b) * sa * sa +
                  vb * (2 * std::sin(2 * a) + 7 * std::sin(4 * a)) * std::sin(b) +
                  8 * vb * std::cos(a) * sa * sa * sa * std::sin(3 * b));
  };
  auto den = [](double a, double b) {
    const double s2a = std::sin(2 * a);
    return 29 + 3 * std::cos(4 * a) + 32 * std::cos(2 * a) * std::cos(2 * b) + 6 * std::cos(4 * b) * s2a * s2a;
  };
  const double d1 = den(t1, t2), d2 = den(t2, t1);
  if (std::abs(d1) < 1e-12 || std::abs(d2) < 1e-12)
    fail(ErrorKind::SingularPoint, "closed-form denominator vanishes");
  return {num(t1, t2, v1, v2) / d1, num(t2, t1, v2, v1) / d2};
}

// Rescale c so that the projection of -i A|psi> on the tangent has the tangent's length.
inline RealVector rescale_to_exact_projection(const LeakageQuadratic& q, const RealVector& c) {
  const double aa = 0.5 * c.dot(q.D * c);
  if (!(aa > 1e-14)) fail(ErrorKind::OrthogonalSubspaces, "controls have no connected weight");
  return (q.K / aa) * c;
}

inline double rescaled_leakage(const LeakageQuadratic& q, const RealVector& c) {
  return q.value(rescale_to_exact_projection(q, c));
}

struct DirectionScan {
  std::vector<double> angles;
  std::vector<double> relative;  // Delta^2 per angle
  double min_value = 0, max_value = 0;
  double min_angle = 0, max_angle = 0;
};

// Delta^2 of the optimal controls for unit velocities (cos phi, sin phi) on a two-parameter manifold.
// Directions whose tangent vanishes are NaN and excluded from the extremes.
inline DirectionScan direction_scan(const Manifold& m, const Params& x, const ControlSet& cs, int n_angles = 64) {
  require(m.dim() == 2, ErrorKind::DimensionMismatch, "direction scans need a two-parameter manifold");
  require(n_angles >= 2 && n_angles % 2 == 0, ErrorKind::InvalidArgument, "angle count must be even");
  const UniformMPS psi = m.mps(x);
  const auto o = build_transfer_objects(psi);
  DirectionScan out;
  for (int k = 0; k < n_angles; ++k) {
    const double phi = 2 * M_PI * k / n_angles;
    Params v(2);
    v << std::cos(phi), std::sin(phi);
    const auto q = leakage_quadratic(o, blocked_tangent(o, psi, m.tangent(x, v)), cs);
    out.angles.push_back(phi);
    // directions with a vanishing tangent have no defined angle to the control span
    out.relative.push_back(q.K > 1e-14 ? relative_leakage(q, q.minimizer()) : std::nan(""));
  }
  auto less = [](double a, double b) { return std::isnan(b) ? !std::isnan(a) : (!std::isnan(a) && a < b); };
  auto greater = [](double a, double b) { return std::isnan(b) ? !std::isnan(a) : (!std::isnan(a) && a > b); };
  const auto mn = std::min_element(out.relative.begin(), out.relative.end(), less);
  const auto mx = std::min_element(out.relative.begin(), out.relative.end(), greater);
  require(!std::isnan(*mn), ErrorKind::ZeroTangent, "every direction has a vanishing tangent");
  out.min_value = *mn;
  out.max_value = *mx;
  out.min_angle = out.angles[static_cast<std::size_t>(mn - out.relative.begin())];
  out.max_angle = out.angles[static_cast<std::size_t>(mx - out.relative.begin())];
  return out;
}

struct LandscapePoint {
  double theta1 = 0, theta2 = 0;
  double min_value = std::nan(""), max_value = std::nan("");
  double min_angle = std::nan(""), max_angle = std::nan("");
  bool singular = false;
};

struct LandscapeBox {
  double lo1 = -M_PI / 2, hi1 = 0.0, lo2 = M_PI / 2, hi2 = M_PI;
};

template <class F>
inline void parallel_for(int n, int jobs, F&& f) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += jobs) f(i);
      } catch (...) {
        errs[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// Row-major grid of resolution^2 points, theta2 varying fastest.  Singular points are flagged, not fatal.
inline std::vector<LandscapePoint> leakage_landscape(const LandscapeBox& box, int resolution, const ControlSet& cs,
                                                     int n_angles = 64, int jobs = 1) {
  require(resolution >= 2, ErrorKind::InvalidArgument, "landscape resolution must be at least 2");
  const PxpManifold m;
  std::vector<LandscapePoint> out(static_cast<std::size_t>(resolution * resolution));
  parallel_for(resolution * resolution, jobs, [&](int k) {
    const int i = k / resolution, j = k % resolution;
    LandscapePoint p;
    p.theta1 = box.lo1 + (box.hi1 - box.lo1) * i / (resolution - 1);
    p.theta2 = box.lo2 + (box.hi2 - box.lo2) * j / (resolution - 1);
    try {
      Params x(2);
      x << p.theta1, p.theta2;
      const auto s = direction_scan(m, x, cs, n_angles);
      p.min_value = s.min_value;
      p.max_value = s.max_value;
      p.min_angle = s.min_angle;
      p.max_angle = s.max_angle;
    } catch (const Error&) {
      p.singular = true;
    }
    out[static_cast<std::size_t>(k)] = p;
  });
  return out;
}

}  // namespace mpsteer
