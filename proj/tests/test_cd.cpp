#include <gtest/gtest.h>

#include "mpsteer/cd.hpp"
#include "test_util.hpp"

using namespace mpsteer;
using namespace mpsteer::pauli;
using namespace testutil;

namespace {

Params pt(double a, double b) {
  Params x(2);
  x << a, b;
  return x;
}

// Explicit PXP counterdiabatic generator for constant a, centred on site c of sublattice "1".
// The same-site sigma^y coefficient is c1 (a1^2 - b1^2) / b1, from i[X, aY + bP + a^2/b n].
OperatorDensity explicit_g(double a1, double b1, double db1, double a2, double c1, double c2, int centre) {
  OperatorDensity g(2);
  auto tilde = [&](const ComplexMatrix& m) { return dress_with_projectors(site_operator(m, centre)); };
  g.add(-2 * a1 * c1 - a1 * a1 * db1 / (b1 * b1), tilde(id()));
  g.add(4 * a1 * c1 + db1 + a1 * a1 * db1 / (b1 * b1), tilde(down()));
  g.add((a1 * a1 - b1 * b1) / b1 * c1, tilde(y()));
  g.add(-b1 * c2, product_operator({down(), y(), down(), down()}, centre - 2));
  g.add(-b1 * c2, product_operator({down(), down(), y(), down()}, centre - 1));
  const ComplexMatrix hop = product_operator({down(), raise(), lower(), down()}).matrix;
  g.add(-(a1 * c2 + a2 * c1), LocalOperator{centre - 2, 4, hop + hop.adjoint()});
  return g;
}

}  // namespace

TEST(Trace, GoldenRatioAndPattern) {
  ComplexMatrix t0(2, 2);
  t0 << 1, 1, 1, 0;
  EXPECT_NEAR(dominant_eigenpair(t0, Side::Right).value.real(), (1 + std::sqrt(5.0)) / 2, 1e-12);
  EXPECT_NEAR(constrained_trace("0z0z"), 3 - 6 / std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(constrained_trace("0000"), 1.0, 1e-14);
}

TEST(Trace, WeightsMatchLargeRing) {
  // the weight of a local configuration is its frequency among constrained ring states
  const auto basis = make_chain_basis(24, Boundary::Periodic, true);
  const RealVector w = configuration_weights(3, true);
  RealVector count = RealVector::Zero(8);
  for (auto s : basis.states) count[static_cast<Eigen::Index>(s >> 21)] += 1.0;
  count /= static_cast<double>(basis.dim());
  EXPECT_LT((count - w).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Generator, MatchesExplicitPxpForm) {
  const double t1 = -0.7, t2 = 2.3, v1 = 0.8, v2 = -0.5, c1 = 0.9, c2 = -1.4;
  const auto h = pxp_parent(t1, t2);
  const auto dh = pxp_parent_derivative(t1, t2, v1, v2);
  RealVector c(2);
  c << c1, c2;
  const auto g = cd_generator(h.density, dh, pxp_controls(), c);
  const double a1 = h.free_params[0], b1 = h.free_params[1], a2 = h.free_params[2], b2 = h.free_params[3];
  auto b = [](double r) { return std::abs(r); };
  const double h_ = 1e-6;
  const double db1 = (b(std::tan(t1 + h_ * v1) / std::cos(t2 + h_ * v2)) - b(std::tan(t1 - h_ * v1) / std::cos(t2 - h_ * v2))) / (2 * h_);
  const double db2 = (b(std::tan(t2 + h_ * v2) / std::cos(t1 + h_ * v1)) - b(std::tan(t2 - h_ * v2) / std::cos(t1 - h_ * v1))) / (2 * h_);
  const auto ex = explicit_g(a1, b1, db1, a2, c1, c2, 0) + explicit_g(a2, b2, db2, a1, c2, c1, 1);
  const auto basis = make_chain_basis(10, Boundary::Periodic, true);
  const ComplexMatrix gm = realize_sparse(g, basis), em = realize_sparse(ex, basis);
  EXPECT_LT((gm - em).norm() / gm.norm(), 1e-6);
}

TEST(GsCd, CostMatchesRingOracle) {
  const PxpManifold m;
  const Params x = pt(-0.3, 2.8), v = pt(0.6, 0.2);
  const auto h = pxp_parent(x[0], x[1]).density;
  const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
  const auto cs = pxp_controls();
  const auto cost = gs_cd_cost(m.mps(x), h, dh, cs);
  RealVector c(2);
  c << 1.3, -0.2;
  std::vector<int> ls{12, 14, 16};
  std::vector<double> vals;
  for (int l : ls) {
    const auto basis = make_chain_basis(l, Boundary::Periodic, true);
    const ComplexVector psi = dense_state(m.mps(x), basis);
    const ComplexVector gpsi = realize_sparse(cd_generator(h, dh, cs, c), basis) * psi;
    vals.push_back(gpsi.squaredNorm() / l);
  }
  EXPECT_NEAR(cost.value(c), extrapolate(ls, vals), 1e-6);
}

TEST(GsCd, EqualsWeightedLeakageOnRing) {
  const PxpManifold m;
  const auto cs = pxp_controls();
  const auto tr = circle_trajectory();
  const auto basis = make_chain_basis(10, Boundary::Periodic, true);
  for (double t : {0.12, 0.31, 0.77}) {
    const Params x = tr.point(t), v = tr.velocity(t);
    const auto h = pxp_parent(x[0], x[1]).density;
    const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
    RealVector c(2);
    c << 2.0, -0.5;
    const auto rt = ring_tangent(m, x, v, basis);
    const auto hm = realize_sparse(h, basis);
    const ComplexVector lhs = realize_sparse(cd_generator(h, dh, cs, c), basis) * rt.psi;
    const ComplexVector rhs = hm * (rt.dpsi + I * (realize_sparse(cs.combine(c), basis) * rt.psi));
    EXPECT_NEAR(lhs.squaredNorm(), rhs.squaredNorm(), 1e-7 * lhs.squaredNorm());
  }
}

namespace {

// Dense per-site Tr[G(c)^2] / D on a constrained ring, as a quadratic in c.
struct DenseQuadratic {
  RealMatrix q;
  RealVector lin;
  double f0;
  double value(const RealVector& c) const { return c.dot(q * c) + lin.dot(c) + f0; }
  RealVector minimizer() const { return -0.5 * q.inverse() * lin; }
};

DenseQuadratic dense_trace_cost(const OperatorDensity& h, const OperatorDensity& dh, const ControlSet& cs, int l) {
  const auto basis = make_chain_basis(l, Boundary::Periodic, true);
  auto tr2 = [&](const RealVector& cc) {
    const SparseOperator g = realize_sparse(cd_generator(h, dh, cs, cc), basis);
    const SparseOperator g2 = g * g;
    Complex s = 0.0;
    for (Eigen::Index k = 0; k < g2.rows(); ++k) s += g2.coeff(k, k);
    return s.real() / static_cast<double>(basis.dim()) / l;
  };
  DenseQuadratic d;
  d.q = RealMatrix(2, 2);
  d.lin = RealVector(2);
  d.f0 = tr2(RealVector::Zero(2));
  for (int i = 0; i < 2; ++i) {
    RealVector e = RealVector::Zero(2);
    e[i] = 1;
    const double fp = tr2(e), fm = tr2(-e);
    d.q(i, i) = 0.5 * (fp + fm) - d.f0;
    d.lin[i] = 0.5 * (fp - fm);
  }
  d.q(0, 1) = d.q(1, 0) = 0.5 * (tr2(RealVector::Ones(2)) - d.f0 - d.lin.sum() - d.q(0, 0) - d.q(1, 1));
  return d;
}

}  // namespace

TEST(TraceCd, CostMatchesDenseTraceOnSmallRing) {
  const auto tr = circle_trajectory();
  const auto cs = pxp_controls();
  for (double t : {0.1, 0.2, 0.35}) {
    const Params x = tr.point(t), v = tr.velocity(t);
    const auto h = pxp_parent(x[0], x[1]).density;
    const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
    const auto cost = trace_cd_cost(h, dh, cs, true);
    const RealVector c = cost.minimizer();
    const auto dense = dense_trace_cost(h, dh, cs, 10);
    // control-dependent part of the per-site cost, relative to its size
    const double mine = cost.value(c) - cost.C0, ring = dense.value(c) - dense.f0;
    EXPECT_LT(std::abs(mine - ring), 1e-3 * std::abs(ring)) << "t = " << t;
  }
}

TEST(TraceCd, ControlsConvergeToDenseTrace) {
  const auto tr = circle_trajectory();
  const auto cs = pxp_controls();
  const Params x = tr.point(0.2), v = tr.velocity(0.2);
  const auto h = pxp_parent(x[0], x[1]).density;
  const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
  const RealVector c = trace_cd_cost(h, dh, cs, true).minimizer();
  double prev = 1e9;
  for (int l : {10, 12, 14, 16}) {
    const double err = (c - dense_trace_cost(h, dh, cs, l).minimizer()).cwiseAbs().maxCoeff();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(TraceCd, StationaryTrajectoryNeedsNoControls) {
  const auto h = pxp_parent(-0.7, 2.3).density;
  const auto dh = pxp_parent_derivative(-0.7, 2.3, 0.0, 0.0);
  EXPECT_LT(trace_cd_cost(h, dh, pxp_controls(), true).minimizer().norm(), 1e-14);
}

TEST(Cd, CostsAreConvex) {
  const PxpManifold m;
  const auto tr = circle_trajectory();
  for (double t : {0.15, 0.4, 0.65, 0.9}) {
    const Params x = tr.point(t), v = tr.velocity(t);
    const auto h = pxp_parent(x[0], x[1]).density;
    const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
    for (const auto& cost : {trace_cd_cost(h, dh, pxp_controls(), true), gs_cd_cost(m.mps(x), h, dh, pxp_controls())}) {
      Eigen::SelfAdjointEigenSolver<RealMatrix> es(cost.C2);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
  }
}

TEST(GsCd, GeneratorHasZeroMean) {
  const PxpManifold m;
  const auto tr = circle_trajectory();
  for (double t : {0.15, 0.4, 0.65}) {
    const Params x = tr.point(t), v = tr.velocity(t);
    const auto h = pxp_parent(x[0], x[1]).density;
    const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
    RealVector c(2);
    c << 0.8, 2.1;
    EXPECT_LT(std::abs(expectation(m.mps(x), cd_generator(h, dh, pxp_controls(), c))), 1e-10);
  }
}

TEST(Cd, TimeDependentRescalingLeavesControlsUnchanged) {
  const PxpManifold m;
  const auto cs = pxp_controls();
  const Params x = pt(-0.8, 2.0), v = pt(0.5, -0.9);
  const auto h = pxp_parent(x[0], x[1]).density;
  const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
  const double f = 1.7, df = -0.6;
  const auto h2 = h.scaled(f);
  const auto dh2 = h.scaled(df) + dh.scaled(f);
  const auto psi = m.mps(x);
  EXPECT_LT((gs_cd_cost(psi, h, dh, cs).minimizer() - gs_cd_cost(psi, h2, dh2, cs).minimizer()).norm(), 1e-10);
  EXPECT_LT((trace_cd_cost(h, dh, cs, true).minimizer() - trace_cd_cost(h2, dh2, cs, true).minimizer()).norm(),
            1e-10);
}

TEST(Cd, SymmetricPointGivesEqualControls) {
  const PxpManifold m;
  const auto tr = circle_trajectory();
  const Params x = tr.point(0.25), v = tr.velocity(0.25);
  const auto h = pxp_parent(x[0], x[1]).density;
  const auto dh = pxp_parent_derivative(x[0], x[1], v[0], v[1]);
  const auto gs = gs_cd_cost(m.mps(x), h, dh, pxp_controls()).minimizer();
  const auto trc = trace_cd_cost(h, dh, pxp_controls(), true).minimizer();
  EXPECT_NEAR(gs[0], gs[1], 1e-9);
  EXPECT_NEAR(trc[0], trc[1], 1e-9);
}
