#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "mpsteer/linalg.hpp"

namespace mpsteer {

// Local basis: index 0 is spin down, index 1 is spin up.  Multi-site matrices
// are Kronecker products with the leftmost site most significant.
namespace pauli {
inline ComplexMatrix id() { return ComplexMatrix::Identity(2, 2); }
inline ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0, I, -I, 0;
  return m;
}
inline ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << -1, 0, 0, 1;
  return m;
}
// Projector on the down state; the "P" of the constrained models.
inline ComplexMatrix down() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1;
  return m;
}
inline ComplexMatrix up() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 1) = 1;
  return m;
}
// |up><down|
inline ComplexMatrix raise() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(1, 0) = 1;
  return m;
}
inline ComplexMatrix lower() { return raise().transpose(); }
}  // namespace pauli

inline int local_dim(int sites, int d = 2) {
  int n = 1;
  for (int i = 0; i < sites; ++i) n *= d;
  return n;
}

struct LocalOperator {
  int offset = 0;
  int support = 1;
  ComplexMatrix matrix = ComplexMatrix::Identity(2, 2);

  int end() const { return offset + support; }

  void validate() const {
    require(support >= 1, ErrorKind::DimensionMismatch, "operator support must be positive");
    const int n = local_dim(support);
    require(matrix.rows() == n && matrix.cols() == n, ErrorKind::DimensionMismatch,
            "operator matrix does not match its support");
  }
};

inline LocalOperator product_operator(const std::vector<ComplexMatrix>& factors, int offset = 0) {
  require(!factors.empty(), ErrorKind::InvalidArgument, "empty product");
  ComplexMatrix m = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) m = kron(m, factors[i]);
  return LocalOperator{offset, static_cast<int>(factors.size()), m};
}

inline LocalOperator site_operator(const ComplexMatrix& m, int offset = 0) { return LocalOperator{offset, 1, m}; }

// Extend op with identities to the window [offset, offset + support).
inline LocalOperator embed(const LocalOperator& op, int offset, int support) {
  require(offset <= op.offset && op.end() <= offset + support, ErrorKind::DimensionMismatch,
          "embedding window does not contain the operator");
  const int left = op.offset - offset;
  const int right = offset + support - op.end();
  ComplexMatrix m = kron(ComplexMatrix::Identity(local_dim(left), local_dim(left)), op.matrix);
  m = kron(m, ComplexMatrix::Identity(local_dim(right), local_dim(right)));
  return LocalOperator{offset, support, m};
}

inline LocalOperator shifted(LocalOperator op, int by) {
  op.offset += by;
  return op;
}

// a * b on the union of their windows (the gap, if any, is filled with identities).
inline LocalOperator multiply(const LocalOperator& a, const LocalOperator& b) {
  const int lo = std::min(a.offset, b.offset);
  const int hi = std::max(a.end(), b.end());
  const auto ea = embed(a, lo, hi - lo);
  const auto eb = embed(b, lo, hi - lo);
  return LocalOperator{lo, hi - lo, ea.matrix * eb.matrix};
}

inline bool overlaps(const LocalOperator& a, const LocalOperator& b) {
  return a.offset < b.end() && b.offset < a.end();
}

// [a, b'] where b' is b translated by relative_offset sites.
inline LocalOperator commutator(const LocalOperator& a, const LocalOperator& b, int relative_offset = 0) {
  const LocalOperator bs = shifted(b, relative_offset);
  const int lo = std::min(a.offset, bs.offset);
  const int hi = std::max(a.end(), bs.end());
  if (!overlaps(a, bs)) {
    const int n = local_dim(hi - lo);
    return LocalOperator{lo, hi - lo, ComplexMatrix::Zero(n, n)};
  }
  const auto ea = embed(a, lo, hi - lo);
  const auto eb = embed(bs, lo, hi - lo);
  return LocalOperator{lo, hi - lo, ea.matrix * eb.matrix - eb.matrix * ea.matrix};
}

// P (x) op (x) P with P the down projector.
inline LocalOperator dress_with_projectors(const LocalOperator& op) {
  ComplexMatrix m = kron(kron(pauli::down(), op.matrix), pauli::down());
  return LocalOperator{op.offset - 1, op.support + 2, m};
}

inline bool is_zero(const LocalOperator& op, double tol = 1e-14) { return op.matrix.cwiseAbs().maxCoeff() <= tol; }

struct DensityTerm {
  double coefficient = 1.0;
  LocalOperator op;
};

// Translation-invariant operator: sum over cells k of every term shifted by k * unit_cell.
struct OperatorDensity {
  int unit_cell = 1;
  std::vector<DensityTerm> terms;

  OperatorDensity() = default;
  explicit OperatorDensity(int cell) : unit_cell(cell) {}

  OperatorDensity& add(double c, const LocalOperator& op) {
    op.validate();
    terms.push_back({c, op});
    return *this;
  }

  int min_offset() const {
    int m = terms.empty() ? 0 : terms.front().op.offset;
    for (const auto& t : terms) m = std::min(m, t.op.offset);
    return m;
  }
  int max_end() const {
    int m = terms.empty() ? 0 : terms.front().op.end();
    for (const auto& t : terms) m = std::max(m, t.op.end());
    return m;
  }

  // All terms of one cell summed on their common window.
  LocalOperator cell_operator() const {
    require(!terms.empty(), ErrorKind::InvalidArgument, "empty density");
    const int lo = min_offset(), hi = max_end();
    const int n = local_dim(hi - lo);
    LocalOperator out{lo, hi - lo, ComplexMatrix::Zero(n, n)};
    for (const auto& t : terms) out.matrix += t.coefficient * embed(t.op, lo, hi - lo).matrix;
    return out;
  }

  OperatorDensity scaled(double s) const {
    OperatorDensity out = *this;
    for (auto& t : out.terms) t.coefficient *= s;
    return out;
  }
};

inline OperatorDensity operator+(const OperatorDensity& a, const OperatorDensity& b) {
  require(a.unit_cell == b.unit_cell, ErrorKind::DimensionMismatch, "unit cells differ");
  OperatorDensity out = a;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  return out;
}

inline OperatorDensity linear_combination(const std::vector<OperatorDensity>& ds, const RealVector& c) {
  require(static_cast<Eigen::Index>(ds.size()) == c.size() && !ds.empty(), ErrorKind::DimensionMismatch,
          "coefficient count does not match densities");
  OperatorDensity out(ds.front().unit_cell);
  for (std::size_t i = 0; i < ds.size(); ++i) out = out + ds[i].scaled(c[static_cast<Eigen::Index>(i)]);
  return out;
}

// Density of factor * [sum_k a_k, sum_k b_k], one term per overlapping pair with b anchored in cell 0.
inline OperatorDensity commutator_density(const OperatorDensity& a, const OperatorDensity& b,
                                          Complex factor = 1.0) {
  require(a.unit_cell == b.unit_cell, ErrorKind::DimensionMismatch, "unit cells differ");
  const int n = a.unit_cell;
  OperatorDensity out(n);
  for (const auto& tb : b.terms)
    for (const auto& ta : a.terms) {
      const int kmin = (tb.op.offset - ta.op.end()) / n - 1;
      const int kmax = (tb.op.end() - ta.op.offset) / n + 1;
      for (int k = kmin; k <= kmax; ++k) {
        const LocalOperator as = shifted(ta.op, k * n);
        if (!overlaps(as, tb.op)) continue;
        LocalOperator c = commutator(as, tb.op);
        c.matrix *= factor;
        if (!is_zero(c, 1e-15)) out.add(ta.coefficient * tb.coefficient, c);
      }
    }
  return out;
}

enum class Boundary { Open, Periodic };

struct ChainBasis {
  int length = 0;
  Boundary boundary = Boundary::Periodic;
  bool constrained = false;
  std::vector<std::uint64_t> states;  // site 0 is the most significant bit; bit set = up
  std::unordered_map<std::uint64_t, Eigen::Index> index;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(states.size()); }
  int bit(std::uint64_t s, int site) const { return static_cast<int>((s >> (length - 1 - site)) & 1u); }
};

inline bool allowed_configuration(std::uint64_t s, int l, Boundary b) {
  if (s & (s >> 1)) return false;
  if (b == Boundary::Periodic && l > 1 && (s & 1u) && ((s >> (l - 1)) & 1u)) return false;
  return true;
}

inline ChainBasis make_chain_basis(int l, Boundary boundary, bool constrained) {
  require(l >= 1 && l <= 30, ErrorKind::SizeLimit, "chain length out of range");
  ChainBasis out;
  out.length = l;
  out.boundary = boundary;
  out.constrained = constrained;
  const std::uint64_t n = std::uint64_t{1} << l;
  for (std::uint64_t s = 0; s < n; ++s)
    if (!constrained || allowed_configuration(s, l, boundary)) out.states.push_back(s);
  for (std::size_t i = 0; i < out.states.size(); ++i) out.index[out.states[i]] = static_cast<Eigen::Index>(i);
  return out;
}

using SparseOperator = Eigen::SparseMatrix<Complex>;

namespace detail {

inline void place(const LocalOperator& op, int position, double coefficient, const ChainBasis& basis,
                  std::vector<Eigen::Triplet<Complex>>& out) {
  const int l = basis.length;
  const int k = op.support;
  std::vector<int> sites(k);
  for (int j = 0; j < k; ++j) sites[j] = ((position + j) % l + l) % l;
  for (Eigen::Index col = 0; col < basis.dim(); ++col) {
    const std::uint64_t s = basis.states[static_cast<std::size_t>(col)];
    int c = 0;
    std::uint64_t cleared = s;
    for (int j = 0; j < k; ++j) {
      c = 2 * c + basis.bit(s, sites[j]);
      cleared &= ~(std::uint64_t{1} << (l - 1 - sites[j]));
    }
    for (int r = 0; r < op.matrix.rows(); ++r) {
      const Complex v = op.matrix(r, c);
      if (v == Complex(0.0)) continue;
      std::uint64_t t = cleared;
      for (int j = 0; j < k; ++j)
        if ((r >> (k - 1 - j)) & 1) t |= std::uint64_t{1} << (l - 1 - sites[j]);
      auto it = basis.index.find(t);
      if (it == basis.index.end()) continue;
      out.emplace_back(it->second, col, coefficient * v);
    }
  }
}

}  // namespace detail

inline SparseOperator realize_sparse(const OperatorDensity& density, const ChainBasis& basis) {
  const int l = basis.length;
  const int n = density.unit_cell;
  require(l % n == 0, ErrorKind::DimensionMismatch, "chain length must be a multiple of the unit cell");
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int cell = 0; cell < l / n; ++cell)
    for (const auto& t : density.terms) {
      const int pos = cell * n + t.op.offset;
      if (basis.boundary == Boundary::Open) {
        if (pos < 0 || pos + t.op.support > l) continue;
      } else {
        require(t.op.support <= l, ErrorKind::DimensionMismatch, "term longer than the ring");
      }
      detail::place(t.op, pos, t.coefficient, basis, trip);
    }
  SparseOperator m(basis.dim(), basis.dim());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// A single operator placed at op.offset (wrapped on periodic chains).
inline SparseOperator realize_sparse(const LocalOperator& op, const ChainBasis& basis) {
  std::vector<Eigen::Triplet<Complex>> trip;
  detail::place(op, op.offset, 1.0, basis, trip);
  SparseOperator m(basis.dim(), basis.dim());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

inline ComplexMatrix realize_on_finite_chain(const OperatorDensity& density, int l, Boundary boundary,
                                             bool constrained = false) {
  const auto basis = make_chain_basis(l, boundary, constrained);
  require(basis.dim() <= 8192, ErrorKind::SizeLimit, "dense realization too large");
  return ComplexMatrix(realize_sparse(density, basis));
}

}  // namespace mpsteer
