#pragma once

#include <Eigen/SVD>
#include <array>
#include <functional>

#include "mpsteer/models.hpp"
#include "mpsteer/mps.hpp"

namespace mpsteer {

inline double entropy_of_schmidt(const RealVector& lambda) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double p = lambda[i] * lambda[i];
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

// Two-supersite infinite MPS in the right-canonical (Gamma lambda) form.
// A supersite is one unit cell of the generating MPS; lambda[k] sits on the bond to the right of supersite k.
class EvolvingState {
 public:
  EvolvingState(const UniformMPS& mps, int chi_max) : chi_max_(chi_max) {
    require(chi_max >= 1, ErrorKind::InvalidArgument, "chi_max must be positive");
    const auto o = build_transfer_objects(mps);
    d_ = mps.d;
    sites_ = mps.unit_cell();
    D_ = o.D;
    canonicalize(o);
  }

  int physical_dim() const { return d_; }
  int sites_per_supersite() const { return sites_; }
  int supersite_dim() const { return D_; }
  int chi_max() const { return chi_max_; }
  void set_chi_max(int chi) { chi_max_ = chi; }

  const SiteTensor& tensor(int k) const { return b_[static_cast<std::size_t>(k)]; }
  const RealVector& schmidt(int k) const { return lambda_[static_cast<std::size_t>(k)]; }
  int bond_dim(int k) const { return static_cast<int>(lambda_[static_cast<std::size_t>(k)].size()); }

  double truncation_error() const { return truncation_; }
  double last_step_truncation() const { return last_truncation_; }

  // Gate on the two supersites (k, k+1) with index t1 * D + t2; returns the discarded weight.
  double apply_bond_gate(int k, const ComplexMatrix& gate) {
    require(gate.rows() == D_ * D_ && gate.cols() == D_ * D_, ErrorKind::DimensionMismatch, "gate size mismatch");
    auto& a = b_[static_cast<std::size_t>(k)];
    auto& b = b_[static_cast<std::size_t>(1 - k)];
    const RealVector& outer = lambda_[static_cast<std::size_t>(1 - k)];
    const auto chi_l = a.front().rows();
    const auto chi_r = b.front().cols();

    std::vector<ComplexMatrix> theta(static_cast<std::size_t>(D_ * D_));
    for (int s1 = 0; s1 < D_; ++s1)
      for (int s2 = 0; s2 < D_; ++s2) theta[static_cast<std::size_t>(s1 * D_ + s2)] = a[s1] * b[s2];
    std::vector<ComplexMatrix> gated(theta.size(), ComplexMatrix::Zero(chi_l, chi_r));
    for (int t = 0; t < D_ * D_; ++t)
      for (int s = 0; s < D_ * D_; ++s) {
        const Complex g = gate(t, s);
        if (g != Complex(0.0)) gated[static_cast<std::size_t>(t)] += g * theta[static_cast<std::size_t>(s)];
      }

    // Psi[(a, t1), (t2, c)] = outer_a Theta'^{t1 t2}_{ac}
    ComplexMatrix theta_mat(chi_l * D_, D_ * chi_r);
    for (int t1 = 0; t1 < D_; ++t1)
      for (int t2 = 0; t2 < D_; ++t2) {
        const auto& g = gated[static_cast<std::size_t>(t1 * D_ + t2)];
        for (Eigen::Index r = 0; r < chi_l; ++r) theta_mat.block(r * D_ + t1, t2 * chi_r, 1, chi_r) = g.row(r);
      }
    const ComplexMatrix psi = weighted_rows(theta_mat, outer);
    Eigen::BDCSVD<ComplexMatrix> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    require(total > 0.0, ErrorKind::TruncationOverflow, "state vanished during gate application");
    Eigen::Index keep = 0;
    while (keep < sv.size() && keep < chi_max_ && sv[keep] > 1e-14 * sv[0]) ++keep;
    const double kept = sv.head(keep).squaredNorm();
    const double discarded = std::max(0.0, (total - kept) / total);
    const ComplexMatrix v = svd.matrixV().leftCols(keep);
    const double nrm = std::sqrt(kept);

    lambda_[static_cast<std::size_t>(k)] = sv.head(keep) / nrm;
    for (int t2 = 0; t2 < D_; ++t2) b[t2] = v.middleRows(t2 * chi_r, chi_r).adjoint();
    const ComplexMatrix av = theta_mat * v / nrm;
    for (int t1 = 0; t1 < D_; ++t1) {
      ComplexMatrix m(chi_l, keep);
      for (Eigen::Index r = 0; r < chi_l; ++r) m.row(r) = av.row(r * D_ + t1);
      a[t1] = std::move(m);
    }
    return discarded;
  }

  // Von Neumann entropies of the two cuts of one unit cell.
  // Multi-site cells: the cut after the first site, then the cell boundary.  Single-site cells: both bonds.
  std::pair<double, double> bond_entropies() const {
    if (sites_ == 1) return {entropy_of_schmidt(lambda_[0]), entropy_of_schmidt(lambda_[1])};
    const auto& a = b_[0];
    const RealVector& outer = lambda_[1];
    const auto chi_l = a.front().rows();
    const auto chi_r = a.front().cols();
    const int dl = d_;
    const int dr = D_ / d_;
    ComplexMatrix m(chi_l * dl, dr * chi_r);
    for (int s = 0; s < D_; ++s) {
      const int s1 = s / dr, s2 = s % dr;
      for (Eigen::Index r = 0; r < chi_l; ++r) m.block(r * dl + s1, s2 * chi_r, 1, chi_r) = outer[r] * a[s].row(r);
    }
    Eigen::BDCSVD<ComplexMatrix> svd(m);
    RealVector sv = svd.singularValues();
    sv /= sv.norm();
    return {entropy_of_schmidt(sv), entropy_of_schmidt(lambda_[0])};
  }

  // Largest deviation from right-canonical form and Schmidt normalization.
  double canonical_error() const {
    double err = 0.0;
    for (int k = 0; k < 2; ++k) {
      const auto& t = b_[static_cast<std::size_t>(k)];
      ComplexMatrix acc = ComplexMatrix::Zero(t.front().rows(), t.front().rows());
      for (const auto& m : t) acc += m * m.adjoint();
      err = std::max(err, (acc - ComplexMatrix::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff());
      err = std::max(err, std::abs(lambda_[static_cast<std::size_t>(k)].squaredNorm() - 1.0));
    }
    return err;
  }

 private:
  static ComplexMatrix weighted_rows(const ComplexMatrix& theta_mat, const RealVector& outer) {
    ComplexMatrix out = theta_mat;
    const Eigen::Index dd = theta_mat.rows() / outer.size();
    for (Eigen::Index r = 0; r < outer.size(); ++r) out.middleRows(r * dd, dd) *= outer[r];
    return out;
  }

  // Fixed points r = X X^dagger, Lambda = Y^dagger Y; the SVD of Y X gives the Schmidt values of the cell boundary.
  void canonicalize(const TransferObjects& o) {
    const int chi = o.chi;
    ComplexMatrix r(chi, chi), l(chi, chi);
    for (int a = 0; a < chi; ++a)
      for (int b = 0; b < chi; ++b) {
        r(a, b) = o.R[a * chi + b];
        l(a, b) = std::conj(o.L[a * chi + b]);
      }
    r = 0.5 * (r + r.adjoint());
    l = 0.5 * (l + l.adjoint());
    if (l.trace().real() < 0) l = -l;
    if (r.trace().real() < 0) r = -r;

    auto factor = [](const ComplexMatrix& h) {
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
      const RealVector w = es.eigenvalues();
      const double wmax = w.cwiseAbs().maxCoeff();
      std::vector<Eigen::Index> kept;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        require(w[i] > -1e-8 * wmax, ErrorKind::DegenerateSpectrum, "fixed point is not positive");
        if (w[i] > 1e-12 * wmax) kept.push_back(i);
      }
      ComplexMatrix x(h.rows(), static_cast<Eigen::Index>(kept.size()));
      ComplexMatrix xinv(static_cast<Eigen::Index>(kept.size()), h.rows());
      for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto i = kept[j];
        x.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(i) * std::sqrt(w[i]);
        xinv.row(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(i).adjoint() / std::sqrt(w[i]);
      }
      return std::pair{x, xinv};
    };
    const auto [x, xinv] = factor(r);                        // r = x x^dagger
    const auto [yd, ydinv] = factor(l);                      // l = yd yd^dagger, Y = yd^dagger
    const ComplexMatrix y = yd.adjoint();
    const ComplexMatrix yinv = ydinv.adjoint();              // right inverse of Y on its range
    Eigen::JacobiSVD<ComplexMatrix> svd(y * x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > 1e-12 * sv[0]) ++rank;
    require(rank > 0, ErrorKind::DegenerateSpectrum, "fixed points are orthogonal");
    const ComplexMatrix u = svd.matrixU().leftCols(rank);
    const ComplexMatrix v = svd.matrixV().leftCols(rank);
    RealVector lam = sv.head(rank);
    lam /= lam.norm();

    SiteTensor bt(static_cast<std::size_t>(D_));
    for (int s = 0; s < D_; ++s) {
      const ComplexMatrix gamma = v.adjoint() * xinv * o.cell[s] * yinv * u;
      bt[s] = gamma * lam.cast<Complex>().asDiagonal();
    }
    b_ = {bt, bt};
    lambda_ = {lam, lam};
    require(canonical_error() < 1e-8, ErrorKind::DegenerateSpectrum, "state could not be brought to canonical form");
  }

  int d_ = 2, sites_ = 1, D_ = 2, chi_max_ = 64;
  std::array<SiteTensor, 2> b_;
  std::array<RealVector, 2> lambda_;
  double truncation_ = 0.0;
  double last_truncation_ = 0.0;

  friend void itebd_step(EvolvingState&, const ComplexMatrix&, double);
};

// Two-supersite bond operator of a density whose unit cell equals the supersite.
inline ComplexMatrix bond_operator(const OperatorDensity& density, int sites_per_supersite) {
  const int n = sites_per_supersite;
  require(density.unit_cell == n, ErrorKind::DimensionMismatch, "density and state unit cells differ");
  const int dim = local_dim(2 * n);
  ComplexMatrix h = ComplexMatrix::Zero(dim, dim);
  for (const auto& t : density.terms) {
    LocalOperator op = shifted(t.op, -n * static_cast<int>(std::floor(static_cast<double>(t.op.offset) / n)));
    require(op.end() <= 2 * n, ErrorKind::DimensionMismatch, "generator term does not fit on two supersites");
    h += t.coefficient * embed(op, 0, 2 * n).matrix;
  }
  return h;
}

// First-order Trotter step with a fixed bond Hamiltonian: exp(-i dt h) on bond (0,1), then on (1,0).
inline void itebd_step(EvolvingState& state, const ComplexMatrix& bond_hamiltonian, double dt) {
  const ComplexMatrix gate = unitary_exp(bond_hamiltonian, dt);
  double w = state.apply_bond_gate(0, gate);
  w += state.apply_bond_gate(1, gate);
  state.last_truncation_ = w;
  state.truncation_ += w;
  if (w > 1e-6)
    fail(ErrorKind::TruncationOverflow, "discarded weight " + std::to_string(w) +
                                             " in one step exceeds 1e-6; raise chi_max (currently " +
                                             std::to_string(state.chi_max()) + ")");
}

inline void itebd_step(EvolvingState& state, const OperatorDensity& generator, double dt) {
  itebd_step(state, bond_operator(generator, state.sites_per_supersite()), dt);
}

inline constexpr double kFidelityCap = 1e3;

// -(1/l) log |<target|state>|^2 from the dominant eigenvalue of the two-supersite mixed transfer matrix.
inline double fidelity_density(const UniformMPS& target, const EvolvingState& state, double cap = kFidelityCap) {
  const auto o = build_transfer_objects(target);
  require(o.D == state.supersite_dim() && o.sites_per_cell == state.sites_per_supersite(),
          ErrorKind::DimensionMismatch, "target and evolved state use different unit cells");
  const auto& a = state.tensor(0);
  const auto& b = state.tensor(1);
  const auto chi_q = a.front().rows();
  ComplexMatrix e = ComplexMatrix::Zero(chi_q * o.chi, chi_q * o.chi);
  for (int s1 = 0; s1 < o.D; ++s1)
    for (int s2 = 0; s2 < o.D; ++s2) e += kron(a[s1] * b[s2], (o.cell[s1] * o.cell[s2]).conjugate());
  double mu = 0.0;
  if (e.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(e, false);
    mu = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (mu <= 0.0) return cap;
  const double f = -2.0 * std::log(mu) / (2.0 * state.sites_per_supersite());
  return std::min(f, cap);
}

// ---------------------------------------------------------------------------------------------
// Exact evolution on a finite chain.

// Time-dependent generator sum_eta c_eta(t) A_eta.
struct Protocol {
  ControlSet controls;
  std::function<RealVector(double)> amplitudes;

  OperatorDensity generator(double t) const { return controls.combine(amplitudes(t)); }

  static Protocol scheduled(ControlSet cs, ControlSchedule sch) {
    return {std::move(cs), [s = std::move(sch)](double t) { return s.at(t); }};
  }
  static Protocol constant(const OperatorDensity& h) {
    ControlSet cs;
    cs.labels = {"H"};
    cs.generators = {h};
    return {cs, [](double) { return RealVector::Ones(1); }};
  }
};

inline constexpr Eigen::Index kDenseEvolveLimit = Eigen::Index{1} << 22;

namespace detail {

inline double sparse_one_norm(const SparseOperator& m) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    double col = 0.0;
    for (SparseOperator::InnerIterator it(m, k); it; ++it) col += std::abs(it.value());
    best = std::max(best, col);
  }
  return best;
}

}  // namespace detail

// Fourth-order Magnus propagation of i d/dt psi = A(t) psi from t0 to t1.
// exp(Omega) psi is applied by a Taylor series in matrix-vector products.
// `observe(t, psi)` is called at t0 and after every step.
inline ComplexVector dense_evolve(const Protocol& protocol, const ChainBasis& basis, ComplexVector psi, double t0,
                                  double t1, double dt,
                                  const std::function<void(double, const ComplexVector&)>& observe = {}) {
  require(basis.dim() <= kDenseEvolveLimit, ErrorKind::SizeLimit, "basis too large for dense evolution");
  require(psi.size() == basis.dim(), ErrorKind::DimensionMismatch, "state does not match basis");
  require(dt > 0.0, ErrorKind::InvalidArgument, "time step must be positive");
  std::vector<SparseOperator> gens;
  std::vector<double> norms;
  for (const auto& g : protocol.controls.generators) {
    gens.push_back(realize_sparse(g, basis));
    norms.push_back(detail::sparse_one_norm(gens.back()));
  }
  auto assemble = [&](double t, double& norm) {
    const RealVector c = protocol.amplitudes(t);
    require(static_cast<std::size_t>(c.size()) == gens.size(), ErrorKind::DimensionMismatch,
            "amplitude count does not match controls");
    SparseOperator a(basis.dim(), basis.dim());
    norm = 0.0;
    for (std::size_t k = 0; k < gens.size(); ++k) {
      if (c[static_cast<Eigen::Index>(k)] == 0.0) continue;
      a += c[static_cast<Eigen::Index>(k)] * gens[k];
      norm += std::abs(c[static_cast<Eigen::Index>(k)]) * norms[k];
    }
    return a;
  };

  const double g1 = 0.5 - std::sqrt(3.0) / 6.0, g2 = 0.5 + std::sqrt(3.0) / 6.0;
  const double kc = std::sqrt(3.0) / 12.0;
  if (observe) observe(t0, psi);
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / dt - 1e-9));
  for (long n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * dt;
    const double h = std::min(dt, t1 - t);
    double n1 = 0.0, n2 = 0.0;
    const SparseOperator a1 = assemble(t + g1 * h, n1);
    const SparseOperator a2 = assemble(t + g2 * h, n2);
    // Omega v = -i h/2 (A1 + A2) v - kc h^2 [A2, A1] v
    auto omega = [&](const ComplexVector& v) -> ComplexVector {
      const ComplexVector x1 = a1 * v, x2 = a2 * v;
      ComplexVector out = Complex(0.0, -0.5 * h) * (x1 + x2);
      if (h * h * kc * n1 * n2 > 0.0) out -= kc * h * h * (a2 * x1 - a1 * x2);
      return out;
    };
    const double bound = 0.5 * h * (n1 + n2) + 2.0 * kc * h * h * n1 * n2;
    const int sub = std::max(1, static_cast<int>(std::ceil(bound / 0.5)));
    for (int s = 0; s < sub; ++s) {
      ComplexVector term = psi, acc = psi;
      for (int k = 1; k < 60; ++k) {
        term = omega(term) / (static_cast<double>(k) * sub);
        acc += term;
        if (term.norm() < 1e-17 * acc.norm()) break;
      }
      psi = std::move(acc);
    }
    if (observe) observe(t + h, psi);
  }
  return psi;
}

// ---------------------------------------------------------------------------------------------
// Protocol runner.

struct EvolutionRecord {
  double t = 0.0;
  double fidelity = 0.0;  // -(1/l) log |<target(t)|psi(t)>|^2
  double entropy1 = 0.0;
  double entropy2 = 0.0;
  double truncation = 0.0;  // accumulated discarded weight
};

struct EvolutionOptions {
  int chi_max = 64;
  double dt = 1e-3;
  int record_every = 10;  // steps between records
  double fidelity_cap = kFidelityCap;
};

// iTEBD under `protocol` from `initial`, with the fidelity measured against target(t).  Controls are
// sampled at step midpoints.
inline std::vector<EvolutionRecord> run_protocol(const UniformMPS& initial, const Protocol& protocol,
                                                 const std::function<UniformMPS(double)>& target,
                                                 double t_final, const EvolutionOptions& opt) {
  require(opt.dt > 0.0 && t_final >= 0.0, ErrorKind::InvalidArgument, "invalid time grid");
  require(opt.record_every >= 1, ErrorKind::InvalidArgument, "record_every must be positive");
  EvolvingState state(initial, opt.chi_max);
  const int n = state.sites_per_supersite();
  std::vector<ComplexMatrix> bond_gens;
  for (const auto& g : protocol.controls.generators) bond_gens.push_back(bond_operator(g, n));

  std::vector<EvolutionRecord> out;
  auto record = [&](double t) {
    const auto [s1, s2] = state.bond_entropies();
    out.push_back({t, fidelity_density(target(t), state, opt.fidelity_cap), s1, s2, state.truncation_error()});
  };
  record(0.0);
  const auto steps = static_cast<long>(std::llround(t_final / opt.dt));
  for (long k = 0; k < steps; ++k) {
    const double tm = (static_cast<double>(k) + 0.5) * opt.dt;
    const RealVector c = protocol.amplitudes(tm);
    ComplexMatrix h = ComplexMatrix::Zero(bond_gens.front().rows(), bond_gens.front().cols());
    for (std::size_t e = 0; e < bond_gens.size(); ++e) h += c[static_cast<Eigen::Index>(e)] * bond_gens[e];
    itebd_step(state, h, opt.dt);
    if ((k + 1) % opt.record_every == 0 || k + 1 == steps) record(static_cast<double>(k + 1) * opt.dt);
  }
  return out;
}

}  // namespace mpsteer
