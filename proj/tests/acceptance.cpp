// Acceptance run: one PASS/FAIL line per criterion, followed by the measured values.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "mpsteer/io.hpp"
#include "mpsteer/parent.hpp"
#include "test_util.hpp"

using namespace mpsteer;

namespace {

struct Outcome {
  Outcome() = default;
  Outcome(bool p, std::string d, std::vector<std::string> i = {}) : pass(p), detail(std::move(d)), info(std::move(i)) {}
  bool pass = false;
  std::string detail;
  std::vector<std::string> info;
};

std::string num(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*e", prec - 1, v);
  return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %s: %s; %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs, limit_s, in_time ? "" : " OVER TIME");
  for (const auto& i : o.info) std::printf("       info: %s\n", i.c_str());
  std::fflush(stdout);
}

Params pt(double a, double b) { return (Params(2) << a, b).finished(); }

// Unnormalized ring amplitudes and their exact derivative along a tangent of the cell tensors.
struct RingDerivative {
  ComplexVector psi, dpsi;
};

RingDerivative ring_derivative(const UniformMPS& mps, const std::vector<SiteTensor>& dcell, const ChainBasis& basis) {
  const int n = mps.unit_cell(), l = basis.length;
  RingDerivative out{ComplexVector(basis.dim()), ComplexVector(basis.dim())};
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    const auto s = basis.states[static_cast<std::size_t>(i)];
    auto a = [&](int j) { return mps.sites[static_cast<std::size_t>(j % n)][static_cast<std::size_t>(basis.bit(s, j))]; };
    auto da = [&](int j) { return dcell[static_cast<std::size_t>(j % n)][static_cast<std::size_t>(basis.bit(s, j))]; };
    std::vector<ComplexMatrix> pre(static_cast<std::size_t>(l + 1)), suf(static_cast<std::size_t>(l + 1));
    const auto chi = mps.bond_dim();
    pre[0] = suf[static_cast<std::size_t>(l)] = ComplexMatrix::Identity(chi, chi);
    for (int j = 0; j < l; ++j) pre[static_cast<std::size_t>(j + 1)] = pre[static_cast<std::size_t>(j)] * a(j);
    for (int j = l - 1; j >= 0; --j) suf[static_cast<std::size_t>(j)] = a(j) * suf[static_cast<std::size_t>(j + 1)];
    Complex d = 0.0;
    for (int j = 0; j < l; ++j)
      d += (pre[static_cast<std::size_t>(j)] * da(j) * suf[static_cast<std::size_t>(j + 1)]).trace();
    out.psi[i] = pre[static_cast<std::size_t>(l)].trace();
    out.dpsi[i] = d;
  }
  return out;
}

std::vector<EvolutionRecord> run_steered(const SteeringProblem& p, Method m, int n, int chi, double dt) {
  EvolutionOptions o;
  o.chi_max = chi;
  o.dt = dt;
  o.record_every = 1 << 30;
  return evolve_along(p, steer(p, m, n).schedule(), o);
}

}  // namespace

int main() {
  const PxpManifold pxp;
  const IsingManifold ising;
  const PxpParentFamily pxp_parent_family;

  criterion(1, "closed-form PXP controls", 10, [&] {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u1(-M_PI / 2, 0.0), u2(M_PI / 2, M_PI), uv(-1.0, 1.0);
    double worst = 0.0;
    int skipped = 0;
    for (int k = 0; k < 1000; ++k) {
      const double t1 = u1(rng), t2 = u2(rng), v1 = uv(rng), v2 = uv(rng);
      if (t1 == -M_PI / 2 || t2 == M_PI / 2) {
        ++skipped;
        continue;
      }
      const RealVector c = optimal_controls(leakage_quadratic(pxp, pt(t1, t2), pt(v1, v2), pxp_controls()));
      const auto [a, b] = closed_form_pxp_controls(t1, t2, v1, v2);
      worst = std::max({worst, std::abs(c[0] - a), std::abs(c[1] - b)});
    }
    return Outcome{worst < 1e-9, "max |dc| = " + num(worst) + " over 1000 points (tol 1e-9)",
                   {std::to_string(skipped) + " samples on the open boundary skipped"}};
  });

  criterion(2, "constrained-trace golden values", 60, [&] {
    const double tr = constrained_trace("0z0z");
    Eigen::Matrix2cd t_down, t_up;
    t_down << 1, 1, 0, 0;
    t_up << 0, 0, 1, 0;
    const double lead = dominant_eigenpair(t_down + t_up, Side::Right).value.real();
    const double e1 = std::abs(tr - (3 - 6 / std::sqrt(5.0))), e2 = std::abs(lead - (1 + std::sqrt(5.0)) / 2);
    return Outcome{e1 < 1e-12 && e2 < 1e-12,
                   "Tr(1 z 1 z) = " + num(tr, 15) + " (err " + num(e1) + "), lambda0 = " + num(lead, 15) + " (err " +
                       num(e2) + ")"};
  });

  criterion(3, "gs-CD cost equals parent-weighted leakage (l = 10)", 120, [&] {
    const auto basis = make_chain_basis(10, Boundary::Periodic, true);
    const auto cs = pxp_controls();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ut(0.02, 0.98), uc(-3.0, 3.0);
    double worst = 0.0;
    int used = 0;
    for (int k = 0; used < 20; ++k) {
      const auto tr = circle_trajectory({1.0, k % 2 ? 1.0 : 0.5});
      const double t = ut(rng);
      const Params x = tr.point(t), v = tr.velocity(t);
      OperatorDensity h(2), dh(2);
      try {
        h = pxp_parent(x[0], x[1]).density;
        dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
      } catch (const Error&) {
        continue;  // ratio outside the parent's range
      }
      ++used;
      RealVector c(2);
      c << uc(rng), uc(rng);
      const auto rd = ring_derivative(pxp.mps(x), pxp.tangent(x, v), basis);
      const double nrm = rd.psi.norm();
      const ComplexVector psi = rd.psi / nrm, dpsi = rd.dpsi / nrm;
      const ComplexVector gpsi = realize_sparse(cd_generator(h, dh, cs, c), basis) * psi;
      const ComplexVector lpsi = realize_sparse(h, basis) * (dpsi + I * (realize_sparse(cs.combine(c), basis) * psi));
      worst = std::max(worst, std::abs(gpsi.squaredNorm() - lpsi.squaredNorm()) / lpsi.squaredNorm());
    }
    return Outcome{worst < 1e-9, "max relative difference " + num(worst) + " at 20 points (tol 1e-9)"};
  });

  criterion(4, "method ordering on the circle (chi 32, dt 1e-3, tau 1)", 600, [&] {
    const SteeringProblem p{&pxp, circle_trajectory({1.0, 1.0}), pxp_controls(), &pxp_parent_family, true};
    const double fl = run_steered(p, Method::Leakage, 200, 32, 1e-3).back().fidelity;
    const double fg = run_steered(p, Method::GsCd, 200, 32, 1e-3).back().fidelity;
    const double ft = run_steered(p, Method::TraceCd, 200, 32, 1e-3).back().fidelity;
    const bool order = fl < fg && fg < ft;
    const SteeringProblem q{&pxp, circle_trajectory({1.0, 0.5}), pxp_controls(), &pxp_parent_family, true};
    const double ql = run_steered(q, Method::Leakage, 200, 32, 1e-3).back().fidelity;
    const double qg = run_steered(q, Method::GsCd, 200, 32, 1e-3).back().fidelity;
    const double qt = run_steered(q, Method::TraceCd, 200, 32, 1e-3).back().fidelity;
    return Outcome{order && fl < 5e-3,
                   "-log F/l at t = 1: leakage " + num(fl) + " < gs-CD " + num(fg) + " < trace-CD " + num(ft) +
                       (order ? " (ordered)" : " (NOT ordered)") + "; leakage < 5e-3 " + (fl < 5e-3 ? "holds" : "fails"),
                   {"quarter arc Z2 -> Z2': leakage " + num(ql) + ", gs-CD " + num(qg) + ", trace-CD " + num(qt)}};
  });

  criterion(5, "leakage landscape (32 x 32)", 300, [&] {
    const int res = 32, nang = 64;
    const LandscapeBox box;
    std::vector<std::optional<DirectionScan>> scans(static_cast<std::size_t>(res * res));
    for (int k = 0; k < res * res; ++k) {
      const int i = k / res, j = k % res;
      const Params x = pt(box.lo1 + (box.hi1 - box.lo1) * i / (res - 1), box.lo2 + (box.hi2 - box.lo2) * j / (res - 1));
      try {
        scans[static_cast<std::size_t>(k)] = direction_scan(pxp, x, pxp_controls(), nang);
      } catch (const Error&) {
      }
    }
    // nearest grid point to (-pi/2 + 0.05, pi/2 + 0.05)
    auto index = [&](double v, double lo, double hi) {
      return static_cast<int>(std::lround((v - lo) / (hi - lo) * (res - 1)));
    };
    const int ic = index(-M_PI / 2 + 0.05, box.lo1, box.hi1), jc = index(M_PI / 2 + 0.05, box.lo2, box.hi2);
    const auto& corner = scans[static_cast<std::size_t>(ic * res + jc)];
    const double dmin = corner ? corner->min_value : std::nan("");
    double edge_max = 0.0;
    for (int i = 1; i < res - 1; ++i) {
      const auto& s = scans[static_cast<std::size_t>(i * res + res - 1)];
      edge_max = s ? std::max(edge_max, s->max_value) : std::nan("");
    }
    double sym = 0.0;
    int singular = 0;
    for (const auto& s : scans) {
      if (!s) {
        ++singular;
        continue;
      }
      for (int a = 0; a < nang / 2; ++a) {
        const double u = s->relative[static_cast<std::size_t>(a)], w = s->relative[static_cast<std::size_t>(a + nang / 2)];
        if (std::isnan(u) && std::isnan(w)) continue;
        sym = std::max(sym, std::isnan(u) || std::isnan(w) ? 1.0 : std::abs(u - w));
      }
    }
    const bool ok = std::abs(dmin - 1.0) < 0.05 && edge_max < 0.1 && sym < 1e-12;
    return Outcome{ok, "Delta2_min near (-pi/2+0.05, pi/2+0.05) = " + num(dmin) + " (|.-1| < 0.05); max Delta2_max on theta2 = pi = " +
                           num(edge_max) + " (< 0.1); phi symmetry " + num(sym) + " (< 1e-12)",
                   {std::to_string(singular) + " singular grid points skipped (degenerate corner)"}};
  });

  criterion(6, "entanglement steering over e1 (optimized e2)", 1800, [&] {
    std::vector<DeformationReport> reps;
    for (double e1 : {-0.05, 0.0, 0.05}) reps.push_back(optimize_deformation(e1, {ObjectiveKind::FinalFidelity}));
    bool ok = true;
    for (std::size_t k = 1; k < reps.size(); ++k)
      ok = ok && reps[k].best.midpoint_entropy > reps[k - 1].best.midpoint_entropy &&
           reps[k].best.final_fidelity > reps[k - 1].best.final_fidelity;
    std::string d = "S(tau/2):", f = "-log F(tau)/l:", e = "e2*:";
    for (const auto& r : reps) {
      d += " " + num(r.best.midpoint_entropy);
      f += " " + num(r.best.final_fidelity);
      e += " " + num(r.best.e2, 3) + (r.no_improvement ? " (boundary)" : "");
    }
    return Outcome{ok, d + "; " + f + (ok ? " (both increasing)" : " (NOT monotone)"),
                   {e + " for e1 = -0.05, 0, 0.05 (quarter arc Z2 -> Z2')"}};
  });

  SampledTrajectory orbit;
  ReturnPoint ret;
  criterion(7, "TLFIM TDVP orbit period", 300, [&] {
    orbit = tdvp_flow(ising, tlfim_hamiltonian(1.0, 0.4, 1.0), IsingManifold::seed(), 0.005, 460);
    ret = closest_return(ising, orbit, 1.0);
    const bool ok = std::abs(ret.t - 2.097) <= 0.05 && ret.distance < 0.05;
    return Outcome{ok, "closest return t0 = " + num(ret.t, 6) + " (2.097 +- 0.05), distance " + num(ret.distance) +
                           " (< 0.05)"};
  });

  criterion(8, "Floquet TLFIM hierarchy at t0 (chi 32, dt 1e-3)", 1800, [&] {
    require(ret.t > 0, ErrorKind::InvalidArgument, "orbit unavailable");
    Trajectory tr = Trajectory::from_samples(orbit);
    tr.t1 = ret.t;
    EvolutionOptions o;
    o.chi_max = 32;
    o.dt = 1e-3;
    o.record_every = 1 << 30;
    const SteeringProblem base{&ising, tr, tlfim_controls(false), nullptr, false};
    const SteeringProblem zy{&ising, tr, tlfim_controls(true), nullptr, false};
    const auto rs = evolve_along(base, ControlSchedule::constant((RealVector(3) << 1.0, 0.4, 1.0).finished()), o);
    const auto rf = evolve_along(base, steer(base, Method::Leakage, 400).schedule(), o);
    const auto rz = evolve_along(zy, steer(zy, Method::Leakage, 400).schedule(), o);
    const double fs = rs.back().fidelity, ff = rf.back().fidelity, fz = rz.back().fidelity;
    const double t0 = ret.t;
    const double gs = rs.back().entropy1 / t0, gf = rf.back().entropy1 / t0, gz = rz.back().entropy1 / t0;
    const bool order = fs > ff && ff > fz, growth = gs > gf && gf > gz;
    return Outcome{order && growth && fz < 1e-3,
                   "-log F/l: static " + num(fs) + " > floquet " + num(ff) + " > floquet+ZY " + num(fz) +
                       (order ? " (ordered)" : " (NOT ordered)") + "; floquet+ZY < 1e-3 " + (fz < 1e-3 ? "holds" : "fails") +
                       "; mean dS/dt " + num(gs) + ", " + num(gf) + ", " + num(gz) + (growth ? " (ordered)" : " (NOT ordered)")};
  });

  criterion(9, "parent Hamiltonians", 300, [&] {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u1(-M_PI / 2 + 0.05, -0.05), u2(M_PI / 2 + 0.05, M_PI - 0.05);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double t1 = u1(rng), t2 = u2(rng);
      worst = std::max(worst, std::abs(parent_variance(pxp.mps(pt(t1, t2)), pxp_parent(t1, t2).density)));
    }
    const auto seed = ising.mps(IsingManifold::seed());
    const double gen = std::abs(parent_variance(seed, general_parent(seed, 3).density));
    const auto basis = make_chain_basis(10, Boundary::Periodic, false);
    double min_gap = 1e300, max_e0 = 0.0;
    for (const std::vector<double>& lam : {std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 1, 1, 16}}) {
      const ComplexMatrix h(realize_sparse(general_parent(seed, 3, lam).density, basis));
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
      max_e0 = std::max(max_e0, std::abs(es.eigenvalues()[0]));
      min_gap = std::min(min_gap, es.eigenvalues()[1] - es.eigenvalues()[0]);
    }
    const bool ok = worst < 1e-10 && gen < 1e-10 && max_e0 < 1e-10 && min_gap > 1e-6;
    return Outcome{ok, "pxp <H^2>/site max " + num(worst) + ", general " + num(gen) + " (< 1e-10); l = 10 |E0| " +
                           num(max_e0) + ", gap " + num(min_gap) + " (> 1e-6)"};
  });

  criterion(10, "thermodynamic correlators vs dense rings (l = 12, 14, 16)", 600, [&] {
    using testutil::extrapolate;
    const std::vector<int> ls{12, 14, 16};
    double worst = 0.0;
    std::vector<std::string> info;
    auto track = [&](const std::string& what, double exact, const std::vector<double>& vals) {
      const double err = std::abs(exact - extrapolate(ls, vals));
      worst = std::max(worst, err);
      info.push_back(what + ": " + num(err));
    };
    // expectation and connected correlator of a random two-cell density on a random short-ranged MPS.
    // The correlator window spans two cells, so ring corrections go as |lambda_2|^(l/2 - 3) and the
    // state needs |lambda_2| < 1e-3 before l = 12 is in the asymptotic regime; seed 4524249 is the
    // first such draw from seed 3 onwards.
    {
      const auto m = testutil::short_ranged_mps(2, 2, 4524249, 1e-3);
      OperatorDensity d(2);
      d.add(1.0, testutil::random_hermitian(3, 0, 103)).add(0.5, testutil::random_hermitian(2, 1, 203));
      std::vector<double> ev, cv;
      for (int l : ls) {
        const auto basis = make_chain_basis(l, Boundary::Periodic, false);
        const ComplexVector psi = dense_state(m, basis);
        const ComplexVector dp = realize_sparse(d, basis) * psi;
        const Complex mean = psi.dot(dp);
        ev.push_back(mean.real() / (l / 2));
        cv.push_back((dp.squaredNorm() - std::norm(mean)) / (l / 2));
      }
      track("expectation", expectation(m, d), ev);
      track("connected_two_point", connected_two_point(m, d, d), cv);
    }
    // tangent overlaps on the PXP manifold
    {
      const Params x = pt(-0.3, 2.8), v = pt(0.7, -0.4);
      const auto psi = pxp.mps(x);
      const auto cs = pxp_controls();
      const Complex k = tangent_overlaps(psi, pxp.tangent(x, v), std::nullopt);
      const Complex z = tangent_overlaps(psi, pxp.tangent(x, v), cs.generators[0]);
      std::vector<double> kr, zr, zi;
      for (int l : ls) {
        const auto basis = make_chain_basis(l, Boundary::Periodic, true);
        const auto rd = ring_derivative(psi, pxp.tangent(x, v), basis);
        const double nrm = rd.psi.norm();
        const ComplexVector p = rd.psi / nrm, dp = rd.dpsi / nrm;
        const double cells = l / 2;
        kr.push_back((dp.squaredNorm() - std::norm(p.dot(dp))) / cells);
        const ComplexVector ap = realize_sparse(cs.generators[0], basis) * p;
        const Complex zz = (dp.dot(ap) - dp.dot(p) * p.dot(ap)) / cells;
        zr.push_back(zz.real());
        zi.push_back(zz.imag());
      }
      track("tangent_overlaps <d|d>_c", k.real(), kr);
      track("tangent_overlaps Re<d|A>_c", z.real(), zr);
      track("tangent_overlaps Im<d|A>_c", z.imag(), zi);
    }
    // fidelity density between two short-ranged states
    {
      auto mixed_ratio = [](const UniformMPS& a, const UniformMPS& b) {
        Eigen::ComplexEigenSolver<ComplexMatrix> es(transfer_matrix(b.sites[0], a.sites[0]), false);
        std::vector<double> w;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) w.push_back(std::abs(es.eigenvalues()[i]));
        std::sort(w.rbegin(), w.rend());
        return w[1] / w[0];
      };
      std::uint32_t seed = 1;
      while (mixed_ratio(testutil::short_ranged_mps(1, 2, seed), testutil::short_ranged_mps(1, 2, seed + 1000)) > 0.2)
        ++seed;
      const auto a = testutil::short_ranged_mps(1, 2, seed);
      const auto b = testutil::short_ranged_mps(1, 2, seed + 1000);
      std::vector<double> fv;
      for (int l : ls) {
        const auto basis = make_chain_basis(l, Boundary::Periodic, false);
        fv.push_back(-std::log(std::norm(dense_state(a, basis).dot(dense_state(b, basis)))) / l);
      }
      track("fidelity_density", fidelity_density(a, EvolvingState(b, 8)), fv);
    }
    std::string joined;
    for (const auto& s : info) joined += (joined.empty() ? "" : "; ") + s;
    return Outcome{worst < 1e-6, "max extrapolation error " + num(worst) + " (tol 1e-6)", {joined}};
  });

  criterion(11, "velocity covariance", 120, [&] {
    double cerr = 0.0, derr = 0.0;
    for (Method m : {Method::Leakage, Method::Rescaled, Method::TraceCd, Method::GsCd}) {
      const SteeringProblem slow{&pxp, circle_trajectory({1.0, 1.0}), pxp_controls(), &pxp_parent_family, true};
      const SteeringProblem fast{&pxp, circle_trajectory({0.5, 1.0}), pxp_controls(), &pxp_parent_family, true};
      const auto a = steer(slow, m, 64), b = steer(fast, m, 64);
      for (std::size_t k = 0; k < a.samples.size(); ++k) {
        const auto &sa = a.samples[k], &sb = b.samples[k];
        for (Eigen::Index j = 0; j < sa.c.size(); ++j)
          cerr = std::max(cerr, std::abs(sb.c[j] - 2 * sa.c[j]) / std::max(1.0, std::abs(sa.c[j])));
        derr = std::max(derr, std::abs(sb.rescaled - sa.rescaled));
      }
    }
    return Outcome{cerr < 1e-12 && derr < 1e-12,
                   "max |c(2v) - 2c(v)| (relative) " + num(cerr) + ", max |dDelta2| " + num(derr) +
                       " over 64 samples x 4 methods (tol 1e-12)"};
  });

  std::printf("%d of 11 criteria failed\n", failures);
  return failures;
}
