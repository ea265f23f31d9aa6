#include <gtest/gtest.h>

#include "mpsteer/models.hpp"
#include "mpsteer/steering.hpp"
#include "mpsteer/tdvp.hpp"

using namespace mpsteer;

namespace {

Params ising_seed() { return (Params(4) << 0.2607, 0.9, 4.888, 0.4308).finished(); }

// PXP cell whose first angle is x0 + x2; x2 also shifts one matrix element by w * x2.
class RedundantPxp final : public Manifold {
 public:
  explicit RedundantPxp(double w) : w_(w) {}
  std::string name() const override { return "redundant"; }
  int dim() const override { return 3; }
  UniformMPS mps(const Params& x) const override {
    SiteTensor a = PxpManifold::site(x[0] + x[2]);
    a[1](1, 1) += w_ * x[2];
    return UniformMPS{2, {a, PxpManifold::site(x[1])}};
  }
  std::vector<SiteTensor> tangent(const Params& x, const Params& v) const override {
    SiteTensor a = PxpManifold::dsite(x[0] + x[2], v[0] + v[2]);
    a[1](1, 1) += w_ * v[2];
    return {a, PxpManifold::dsite(x[1], v[1])};
  }

 private:
  double w_;
};

}  // namespace

TEST(Tdvp, IsingSeedReturnsAfterOnePeriod) {
  const IsingManifold m;
  const auto tr = tdvp_flow(m, tlfim_hamiltonian(), ising_seed(), 0.005, 560);
  const auto r = closest_return(m, tr, 1.0);
  EXPECT_NEAR(r.t, 2.097, 0.05);
  EXPECT_LT(r.distance, 0.05);
}

TEST(Tdvp, ConservesEnergy) {
  const IsingManifold m;
  const auto h = tlfim_hamiltonian();
  const auto tr = tdvp_flow(m, h, ising_seed(), 0.005, 200);
  const double e0 = expectation(m.mps(tr.points().front()), h);
  for (std::size_t i = 0; i < tr.points().size(); i += 20)
    EXPECT_NEAR(expectation(m.mps(tr.points()[i]), h), e0, 1e-7) << tr.times()[i];
}

TEST(Tdvp, VelocityMinimizesLeakageAtFixedGenerator) {
  const IsingManifold m;
  const ControlSet cs = tlfim_controls();
  const RealVector c = (RealVector(3) << 1.0, 0.4, 1.0).finished();
  for (const Params& x : {ising_seed(), Params((Params(4) << 0.4, 1.2, 2.0, 0.7).finished())}) {
    const Params v = tdvp_velocity(m, tlfim_hamiltonian(), x);
    const double base = leakage_quadratic(m, x, v, cs).value(c);
    for (int j = 0; j < 4; ++j)
      for (double s : {-1e-3, 1e-3}) {
        const Params w = v + s * Params::Unit(4, j);
        EXPECT_GT(leakage_quadratic(m, x, w, cs).value(c), base);
      }
  }
}

TEST(Tdvp, PxpVelocityMinimizesLeakageAtUnitControls) {
  const PxpManifold m;
  const ControlSet cs = pxp_controls();
  for (const Params& x : {Params((Params(2) << -1.2, 2.7).finished()), Params((Params(2) << -0.3, 2.0).finished())}) {
    const Params v = tdvp_velocity(m, pxp_hamiltonian(), x);
    const double base = leakage_quadratic(m, x, v, cs).value(RealVector::Ones(2));
    for (int j = 0; j < 2; ++j)
      for (double s : {-1e-3, 1e-3})
        EXPECT_GT(leakage_quadratic(m, x, Params(v + s * Params::Unit(2, j)), cs).value(RealVector::Ones(2)), base);
  }
}

TEST(Tdvp, RedundantDirectionIsDropped) {
  const RedundantPxp m(0.0);
  const Params x = (Params(3) << -0.6, 2.5, -0.4).finished();
  const Params v = tdvp_velocity(m, pxp_hamiltonian(), x);
  const Params ref = tdvp_velocity(PxpManifold(), pxp_hamiltonian(), (Params(2) << -1.0, 2.5).finished());
  EXPECT_NEAR(v[0], v[2], 1e-9);
  EXPECT_NEAR(v[0] + v[2], ref[0], 1e-9);
  EXPECT_NEAR(v[1], ref[1], 1e-9);
}

TEST(Tdvp, NearlyRedundantDirectionIsIllConditioned) {
  const RedundantPxp m(1e-5);
  const Params x = (Params(3) << -0.6, 2.5, -0.4).finished();
  try {
    tdvp_velocity(m, pxp_hamiltonian(), x);
    FAIL() << "expected IllConditionedTangent";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IllConditionedTangent);
  }
}
