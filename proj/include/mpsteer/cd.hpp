#pragma once

#include "mpsteer/parent.hpp"
#include "mpsteer/steering.hpp"

namespace mpsteer {

// Per-site cost S(c) = c^T C2 c + C1^T c + C0 of a counterdiabatic ansatz.
struct CdCost {
  RealMatrix C2;
  RealVector C1;
  double C0 = 0.0;

  double value(const RealVector& c) const { return c.dot(C2 * c) + C1.dot(c) + C0; }
  RealVector minimizer() const { return -0.5 * symmetric_pinv(C2, 1e-12) * C1; }
};

// The pieces of G = dH + i [A, H]: g_0 = dH and g_eta = i [A_eta, H].
inline std::vector<OperatorDensity> cd_generator_terms(const OperatorDensity& h, const OperatorDensity& dh,
                                                       const ControlSet& cs) {
  cs.validate();
  std::vector<OperatorDensity> g{dh};
  for (const auto& a : cs.generators) g.push_back(commutator_density(a, h, I));
  return g;
}

inline OperatorDensity cd_generator(const OperatorDensity& h, const OperatorDensity& dh, const ControlSet& cs,
                                    const RealVector& c) {
  const auto g = cd_generator_terms(h, dh, cs);
  OperatorDensity out = g[0];
  for (std::size_t k = 1; k < g.size(); ++k) out = out + g[k].scaled(c[static_cast<Eigen::Index>(k - 1)]);
  return out;
}

inline CdCost cost_from_pairs(const std::vector<OperatorDensity>& g, const auto& pair) {
  const auto n = static_cast<Eigen::Index>(g.size()) - 1;
  CdCost s;
  s.C2 = RealMatrix::Zero(n, n);
  s.C1 = RealVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j)
      s.C2(i, j) = s.C2(j, i) = pair(g[static_cast<std::size_t>(i + 1)], g[static_cast<std::size_t>(j + 1)]);
    s.C1[i] = 2.0 * pair(g[0], g[static_cast<std::size_t>(i + 1)]);
  }
  s.C0 = pair(g[0], g[0]);
  return s;
}

// Ground-state cost: <psi|G^2|psi>_c per site, with psi annihilated by H.
inline CdCost gs_cd_cost(const UniformMPS& psi, const OperatorDensity& h, const OperatorDensity& dh,
                         const ControlSet& cs) {
  const auto o = build_transfer_objects(psi);
  const auto g = cd_generator_terms(h, dh, cs);
  std::vector<std::vector<Insertion>> ins;
  for (const auto& x : g) ins.push_back(cell_insertions(x, o.sites_per_cell));
  auto index_of = [&](const OperatorDensity& x) { return static_cast<std::size_t>(&x - g.data()); };
  const double per_site = 1.0 / o.sites_per_cell;
  return cost_from_pairs(g, [&](const OperatorDensity& a, const OperatorDensity& b) {
    Complex s = 0.0;
    for (const auto& x : ins[index_of(a)])
      for (const auto& y : ins[index_of(b)]) s += connected_sum(o, x, y);
    return s.real() * per_site;
  });
}

// Weight of every computational configuration under the normalized trace of an infinite chain,
// optionally restricted to configurations without neighbouring up spins.
inline RealVector configuration_weights(int sites, bool constrained) {
  const int n = local_dim(sites);
  RealVector w(n);
  if (!constrained) {
    w.setConstant(1.0 / n);
    return w;
  }
  const double phi = (1 + std::sqrt(5.0)) / 2;
  Eigen::Matrix2d t_down, t_up;
  t_down << 1, 1, 0, 0;
  t_up << 0, 0, 1, 0;
  const Eigen::Vector2d e = Eigen::Vector2d(phi, 1.0) / std::sqrt(2 + phi);
  for (int s = 0; s < n; ++s) {
    Eigen::RowVector2d v = e.transpose();
    for (int k = 0; k < sites; ++k) v = v * (((s >> (sites - 1 - k)) & 1) ? t_up : t_down);
    w[s] = v.dot(e) / std::pow(phi, sites);
  }
  return w;
}

// Normalized trace of a local operator in the thermodynamic limit.
inline Complex normalized_trace(const LocalOperator& op, bool constrained) {
  const RealVector w = configuration_weights(op.support, constrained);
  Complex t = 0.0;
  for (Eigen::Index s = 0; s < w.size(); ++s) t += op.matrix(s, s) * w[s];
  return t;
}

// Trace of a string over {'0', 'z'} on the constrained chain, e.g. "0z0z".
inline double constrained_trace(const std::string& pattern) {
  std::vector<ComplexMatrix> f;
  for (char c : pattern) {
    require(c == '0' || c == 'z', ErrorKind::InvalidArgument, "pattern letters are 0 and z");
    f.push_back(c == '0' ? pauli::id() : pauli::z());
  }
  return normalized_trace(product_operator(f), true).real();
}

// Pair trace sum over every relative placement with overlapping supports; disjoint placements
// drop out of every coefficient that multiplies a control.
inline double trace_pair(const OperatorDensity& a, const OperatorDensity& b, bool constrained) {
  const int n = a.unit_cell;
  double total = 0.0;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms) {
      const int kmin = (ta.op.offset - tb.op.end()) / n - 1;
      const int kmax = (ta.op.end() - tb.op.offset) / n + 1;
      for (int k = kmin; k <= kmax; ++k) {
        const LocalOperator bs = shifted(tb.op, k * n);
        if (!overlaps(ta.op, bs)) continue;
        total += ta.coefficient * tb.coefficient * normalized_trace(multiply(ta.op, bs), constrained).real();
      }
    }
  return total / n;
}

inline CdCost trace_cd_cost(const OperatorDensity& h, const OperatorDensity& dh, const ControlSet& cs,
                            bool constrained) {
  const auto g = cd_generator_terms(h, dh, cs);
  return cost_from_pairs(g, [&](const OperatorDensity& a, const OperatorDensity& b) {
    return trace_pair(a, b, constrained);
  });
}

}  // namespace mpsteer
