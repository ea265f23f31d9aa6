#pragma once

#include "mpsteer/manifolds.hpp"

namespace mpsteer {

enum class Branch { Ground, Highest };

struct ParentHamiltonian {
  OperatorDensity density;
  int support = 3;
  std::vector<double> free_params;  // (a1, b1, a2, b2) for PXP, the lambda weights otherwise
};

namespace detail {

inline LocalOperator pxp_parent_term(double a, double b, int centre) {
  using namespace pauli;
  const ComplexMatrix loc = a * y() + b * down() + (a * a / b) * up();
  return dress_with_projectors(site_operator(loc, centre));
}

// r1 = tan(theta1) / cos(theta2), r2 = tan(theta2) / cos(theta1)
inline std::pair<double, double> pxp_ratios(double t1, double t2) {
  return {std::tan(t1) / std::cos(t2), std::tan(t2) / std::cos(t1)};
}

inline void check_ratio(double r) {
  if (!std::isfinite(r) || std::abs(r) < 1e-10 || std::abs(r) > 1e10)
    fail(ErrorKind::ParentUndefined, "parent coefficient b vanishes or diverges");
}

}  // namespace detail

// Frustration-free parent of the PXP manifold state: a sum of P (a Y + b P + a^2/b N) P on each site,
// with |a| = 1 and b = |r| > 0.  The highest-state branch is the negated Hamiltonian.
inline ParentHamiltonian pxp_parent(double theta1, double theta2, Branch branch = Branch::Ground) {
  const auto [r1, r2] = detail::pxp_ratios(theta1, theta2);
  detail::check_ratio(r1);
  detail::check_ratio(r2);
  const double a1 = r1 > 0 ? 1.0 : -1.0, a2 = r2 > 0 ? 1.0 : -1.0;
  const double b1 = std::abs(r1), b2 = std::abs(r2);
  const double sign = branch == Branch::Ground ? 1.0 : -1.0;
  ParentHamiltonian h;
  h.density = OperatorDensity(2);
  h.density.add(sign, detail::pxp_parent_term(a1, b1, 0));
  h.density.add(sign, detail::pxp_parent_term(a2, b2, 1));
  h.free_params = {a1, b1, a2, b2};
  return h;
}

// Time derivative of the PXP parent along (theta1', theta2'); a is locally constant.
inline OperatorDensity pxp_parent_derivative(double t1, double t2, double v1, double v2,
                                             Branch branch = Branch::Ground) {
  using namespace pauli;
  const auto [r1, r2] = detail::pxp_ratios(t1, t2);
  detail::check_ratio(r1);
  detail::check_ratio(r2);
  const double c1 = std::cos(t1), c2 = std::cos(t2);
  const double dr1 = v1 / (c1 * c1 * c2) + std::tan(t1) * std::sin(t2) * v2 / (c2 * c2);
  const double dr2 = v2 / (c2 * c2 * c1) + std::tan(t2) * std::sin(t1) * v1 / (c1 * c1);
  const double sign = branch == Branch::Ground ? 1.0 : -1.0;
  OperatorDensity d(2);
  int centre = 0;
  for (auto [r, dr] : {std::pair{r1, dr1}, std::pair{r2, dr2}}) {
    const double b = std::abs(r), db = (r > 0 ? 1.0 : -1.0) * dr;
    const ComplexMatrix loc = db * down() - (db / (b * b)) * up();
    d.add(sign, dress_with_projectors(site_operator(loc, centre)));
    ++centre;
  }
  return d;
}

// Projector weights on the complement of the span of l_s-site MPS windows, one term per cell position.
// `frame`, when given, holds one reference basis per position; the new complement basis is the
// Lowdin-orthogonalized projection of that reference, which keeps the family smooth in time.
inline ParentHamiltonian general_parent(const UniformMPS& mps, int support, std::vector<double> lambdas = {},
                                        const std::vector<ComplexMatrix>* frame = nullptr,
                                        std::vector<ComplexMatrix>* basis_out = nullptr) {
  mps.validate();
  const int n = mps.unit_cell();
  const int chi = mps.bond_dim();
  const int dim = local_dim(support, mps.d);
  require(support >= 1, ErrorKind::InvalidArgument, "support must be positive");
  if (chi * chi >= dim) fail(ErrorKind::DimensionMismatch, "window span fills the local Hilbert space");
  ParentHamiltonian h;
  h.density = OperatorDensity(n);
  h.support = support;
  if (basis_out) basis_out->clear();
  for (int p = 0; p < n; ++p) {
    std::vector<SiteTensor> window;
    for (int k = 0; k < support; ++k) window.push_back(mps.sites[static_cast<std::size_t>((p + k) % n)]);
    const SiteTensor blocked = block_tensors(window);
    ComplexMatrix v(dim, chi * chi);
    for (int s = 0; s < dim; ++s)
      for (int i = 0; i < chi; ++i)
        for (int j = 0; j < chi; ++j) v(s, i * chi + j) = blocked[static_cast<std::size_t>(s)](i, j);
    Eigen::JacobiSVD<ComplexMatrix> svd(v, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv[k] > 1e-10 * sv[0]) ++rank;
    ComplexMatrix w = svd.matrixU().rightCols(dim - rank);
    if (frame) {
      const ComplexMatrix& ref = (*frame)[static_cast<std::size_t>(p)];
      require(ref.rows() == dim && ref.cols() == w.cols(), ErrorKind::DimensionMismatch,
              "reference frame does not match the complement");
      const ComplexMatrix proj = w * (w.adjoint() * ref);
      const ComplexMatrix gram = proj.adjoint() * proj;
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(gram);
      if (es.eigenvalues().minCoeff() < 1e-8) fail(ErrorKind::ParentUndefined, "reference frame lost rank");
      w = proj * es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().adjoint();
    }
    if (lambdas.empty()) lambdas.assign(static_cast<std::size_t>(w.cols()), 1.0);
    if (static_cast<Eigen::Index>(lambdas.size()) != w.cols())
      fail(ErrorKind::DimensionMismatch, "need one weight per complement vector");
    for (double l : lambdas) require(l > 0, ErrorKind::InvalidArgument, "weights must be positive");
    ComplexMatrix term = ComplexMatrix::Zero(dim, dim);
    for (Eigen::Index k = 0; k < w.cols(); ++k)
      term += lambdas[static_cast<std::size_t>(k)] * w.col(k) * w.col(k).adjoint();
    h.density.add(1.0, LocalOperator{p, support, term});
    if (basis_out) basis_out->push_back(w);
  }
  h.free_params = lambdas;
  return h;
}

// A smooth family of parent Hamiltonians along a manifold.
class ParentFamily {
 public:
  virtual ~ParentFamily() = default;
  virtual ParentHamiltonian at(const Params& x) const = 0;

  // d/dt H(x(t)) for x' = v.  Default: central differences.
  virtual OperatorDensity derivative(const Params& x, const Params& v) const {
    const double h = 1e-5;
    const auto hp = at(x + h * v).density, hm = at(x - h * v).density;
    return hp.scaled(1.0 / (2 * h)) + hm.scaled(-1.0 / (2 * h));
  }
};

class PxpParentFamily final : public ParentFamily {
 public:
  explicit PxpParentFamily(Branch b = Branch::Ground) : branch_(b) {}
  ParentHamiltonian at(const Params& x) const override { return pxp_parent(x[0], x[1], branch_); }
  OperatorDensity derivative(const Params& x, const Params& v) const override {
    return pxp_parent_derivative(x[0], x[1], v[0], v[1], branch_);
  }

 private:
  Branch branch_;
};

// General parent with its complement basis aligned to the one at the point of evaluation.
class GeneralParentFamily final : public ParentFamily {
 public:
  GeneralParentFamily(const Manifold& m, int support, std::vector<double> lambdas = {})
      : m_(m), support_(support), lambdas_(std::move(lambdas)) {}

  ParentHamiltonian at(const Params& x) const override {
    return general_parent(m_.mps(x), support_, lambdas_);
  }

  OperatorDensity derivative(const Params& x, const Params& v) const override {
    std::vector<ComplexMatrix> frame;
    general_parent(m_.mps(x), support_, lambdas_, nullptr, &frame);
    const double h = 1e-5;
    const auto hp = general_parent(m_.mps(x + h * v), support_, lambdas_, &frame).density;
    const auto hm = general_parent(m_.mps(x - h * v), support_, lambdas_, &frame).density;
    return hp.scaled(1.0 / (2 * h)) + hm.scaled(-1.0 / (2 * h));
  }

  // Parent at x expressed in the frame of a reference point.
  ParentHamiltonian aligned(const Params& x, const Params& reference) const {
    std::vector<ComplexMatrix> frame;
    general_parent(m_.mps(reference), support_, lambdas_, nullptr, &frame);
    return general_parent(m_.mps(x), support_, lambdas_, &frame);
  }

 private:
  const Manifold& m_;
  int support_;
  std::vector<double> lambdas_;
};

// Per-site <H^2> on the infinite chain; zero when every local term annihilates the state.
inline double parent_variance(const UniformMPS& psi, const OperatorDensity& h) {
  const auto o = build_transfer_objects(psi);
  const double mean = expectation_complex(o, h).real();
  return (connected_two_point_complex(o, h, h).real() + mean * mean) / psi.unit_cell();
}

}  // namespace mpsteer
