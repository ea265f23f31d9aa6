#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mpsteer/operators.hpp"

namespace mpsteer {

// One chi x chi matrix per physical index.
using SiteTensor = std::vector<ComplexMatrix>;

struct UniformMPS {
  int d = 2;
  std::vector<SiteTensor> sites;  // the repeating unit cell, left to right

  int unit_cell() const { return static_cast<int>(sites.size()); }
  int bond_dim() const { return sites.empty() ? 0 : static_cast<int>(sites.front().front().rows()); }

  void validate() const {
    require(!sites.empty(), ErrorKind::DimensionMismatch, "empty unit cell");
    const auto chi = sites.front().front().rows();
    for (const auto& s : sites) {
      require(static_cast<int>(s.size()) == d, ErrorKind::DimensionMismatch, "physical dimension mismatch");
      for (const auto& m : s)
        require(m.rows() == chi && m.cols() == chi, ErrorKind::DimensionMismatch, "bond dimension mismatch");
    }
  }
};

inline SiteTensor scaled(SiteTensor t, Complex s) {
  for (auto& m : t) m *= s;
  return t;
}

// Contract the unit cell into one tensor with physical index s = s_1 d^{n-1} + ... + s_n.
inline SiteTensor block_tensors(const std::vector<SiteTensor>& cell) {
  SiteTensor out = cell.front();
  for (std::size_t k = 1; k < cell.size(); ++k) {
    SiteTensor next;
    next.reserve(out.size() * cell[k].size());
    for (const auto& a : out)
      for (const auto& b : cell[k]) next.push_back(a * b);
    out = std::move(next);
  }
  return out;
}

// Derivative of the blocked tensor given per-site derivatives (product rule).
inline SiteTensor block_tangent(const std::vector<SiteTensor>& cell, const std::vector<SiteTensor>& dcell) {
  require(cell.size() == dcell.size(), ErrorKind::DimensionMismatch, "tangent unit cell mismatch");
  SiteTensor total;
  for (std::size_t k = 0; k < cell.size(); ++k) {
    auto mixed = cell;
    mixed[k] = dcell[k];
    SiteTensor term = block_tensors(mixed);
    if (total.empty()) {
      total = std::move(term);
    } else {
      for (std::size_t s = 0; s < total.size(); ++s) total[s] += term[s];
    }
  }
  return total;
}

inline ComplexMatrix transfer_matrix(const SiteTensor& ket, const SiteTensor& bra) {
  const auto chi = ket.front().rows();
  const auto chib = bra.front().rows();
  ComplexMatrix t = ComplexMatrix::Zero(chi * chib, chi * chib);
  for (std::size_t s = 0; s < ket.size(); ++s) t += kron(ket[s], bra[s].conjugate());
  return t;
}

// Fixed points and reduced resolvent of a uniform MPS, with the leading eigenvalue scaled to one.
struct TransferObjects {
  int d = 2;
  int sites_per_cell = 1;
  int D = 2;  // d^sites_per_cell
  int chi = 1;
  SiteTensor cell;     // blocked, already scaled
  double scale = 1.0;  // original leading eigenvalue
  Complex tensor_factor = 1.0;
  ComplexMatrix T;
  ComplexVector L, R;  // L^T T = L^T, T R = R, L^T R = 1
  ComplexMatrix P;
  ComplexMatrix Tinv;  // Q (1 - QTQ)^{-1} Q
  double second_modulus = 0.0;
};

inline TransferObjects build_transfer_objects(const UniformMPS& mps) {
  mps.validate();
  TransferObjects o;
  o.d = mps.d;
  o.sites_per_cell = mps.unit_cell();
  o.D = local_dim(o.sites_per_cell, o.d);
  o.chi = mps.bond_dim();
  SiteTensor raw = block_tensors(mps.sites);
  const ComplexMatrix t0 = transfer_matrix(raw, raw);
  const auto right = dominant_eigenpair(t0, Side::Right);
  require(std::abs(right.value.imag()) < 1e-10 * std::abs(right.value) && right.value.real() > 0,
          ErrorKind::DegenerateSpectrum, "leading transfer eigenvalue is not positive");
  o.scale = right.value.real();
  o.tensor_factor = 1.0 / std::sqrt(o.scale);
  o.cell = scaled(raw, o.tensor_factor);
  o.T = t0 / o.scale;
  const auto left = dominant_eigenpair(o.T, Side::Left);
  o.R = right.vector;
  // Fix the gauge phase so that R viewed as a chi x chi matrix has positive trace.
  Complex tr = 0.0;
  for (int a = 0; a < o.chi; ++a) tr += o.R[a * o.chi + a];
  if (std::abs(tr) > 1e-14) o.R *= std::conj(tr) / std::abs(tr);
  const Complex lr = left.vector.transpose() * o.R;
  require(std::abs(lr) > 1e-14, ErrorKind::DegenerateSpectrum, "left and right fixed points are orthogonal");
  o.L = left.vector / lr;
  o.P = o.R * o.L.transpose();
  o.Tinv = pseudo_inverse_on_complement(o.T, o.P);
  o.second_modulus = std::abs(right.value) * (1.0 - right.gap) / o.scale;
  return o;
}

// Operator acting on `cells` consecutive blocked cells, starting `start` cells into an insertion window.
struct PlacedOperator {
  int start = 0;
  int cells = 1;
  ComplexMatrix matrix;
};

// One factor of a correlator: a window of cells carrying operators and tensor replacements.
struct Insertion {
  int cells = 1;
  std::vector<PlacedOperator> ops;  // leftmost factor first
  std::map<int, SiteTensor> ket, bra;
};

inline Insertion operator_insertion(int cells, const ComplexMatrix& m) {
  Insertion x;
  x.cells = cells;
  x.ops.push_back({0, cells, m});
  return x;
}

inline Insertion ket_tangent_insertion(const SiteTensor& dm) {
  Insertion x;
  x.ket[0] = dm;
  return x;
}

inline Insertion bra_tangent_insertion(const SiteTensor& dm) {
  Insertion x;
  x.bra[0] = dm;
  return x;
}

// Transfer matrix of a composite window, indexed (a a'),(b b') like T.
inline ComplexMatrix window_transfer(const TransferObjects& o, const Insertion& w) {
  using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const int chi = o.chi;
  const int chi2 = chi * chi;
  auto chain = [&](const std::map<int, SiteTensor>& repl) {
    RowMat k = RowMat::Zero(1, chi2);
    for (int a = 0; a < chi; ++a) k(0, a * chi + a) = 1.0;
    for (int c = 0; c < w.cells; ++c) {
      auto it = repl.find(c);
      const SiteTensor& a = (it == repl.end()) ? o.cell : it->second;
      RowMat next(k.rows() * o.D, chi2);
      for (Eigen::Index r = 0; r < k.rows(); ++r) {
        Eigen::Map<const RowMat> mr(k.row(r).data(), chi, chi);
        for (int s = 0; s < o.D; ++s) {
          RowMat prod = mr * a[static_cast<std::size_t>(s)];
          next.row(r * o.D + s) = Eigen::Map<const Eigen::Matrix<Complex, 1, Eigen::Dynamic>>(prod.data(), chi2);
        }
      }
      k = std::move(next);
    }
    return k;
  };
  RowMat ket = chain(w.ket);
  RowMat bra = chain(w.bra);
  for (auto it = w.ops.rbegin(); it != w.ops.rend(); ++it) {
    const Eigen::Index dk = local_dim(it->cells, o.D);
    require(it->matrix.rows() == dk && it->matrix.cols() == dk && it->start >= 0 &&
                it->start + it->cells <= w.cells,
            ErrorKind::DimensionMismatch, "placed operator does not fit its window");
    const Eigen::Index left = local_dim(it->start, o.D);
    const Eigen::Index right = local_dim(w.cells - it->start - it->cells, o.D);
    const Eigen::Index cols = right * chi2;
    for (Eigen::Index l = 0; l < left; ++l) {
      Eigen::Map<RowMat> blk(ket.data() + l * dk * cols, dk, cols);
      RowMat tmp = it->matrix * blk;
      blk = tmp;
    }
  }
  const ComplexMatrix f = ket.transpose() * bra.conjugate();
  ComplexMatrix e(chi2, chi2);
  for (int a = 0; a < chi; ++a)
    for (int b = 0; b < chi; ++b)
      for (int ap = 0; ap < chi; ++ap)
        for (int bp = 0; bp < chi; ++bp) e(a * chi + ap, b * chi + bp) = f(a * chi + b, ap * chi + bp);
  return e;
}

inline Complex window_expectation(const TransferObjects& o, const Insertion& w) {
  return o.L.transpose() * window_transfer(o, w) * o.R;
}

// x followed by y translated by r cells, on the smallest covering window.
inline Insertion combine(const Insertion& x, const Insertion& y, int r) {
  const int lo = std::min(0, r);
  const int hi = std::max(x.cells, r + y.cells);
  Insertion out;
  out.cells = hi - lo;
  for (const auto& op : x.ops) out.ops.push_back({op.start - lo, op.cells, op.matrix});
  for (const auto& op : y.ops) out.ops.push_back({op.start + r - lo, op.cells, op.matrix});
  for (const auto& [c, t] : x.ket) out.ket[c - lo] = t;
  for (const auto& [c, t] : x.bra) out.bra[c - lo] = t;
  for (const auto& [c, t] : y.ket) {
    require(!out.ket.count(c + r - lo), ErrorKind::InvalidArgument, "double ket replacement");
    out.ket[c + r - lo] = t;
  }
  for (const auto& [c, t] : y.bra) {
    require(!out.bra.count(c + r - lo), ErrorKind::InvalidArgument, "double bra replacement");
    out.bra[c + r - lo] = t;
  }
  return out;
}

// Extensive part of <X Y>_c per unit cell: sum over every relative placement of Y against a fixed X.
inline Complex connected_sum(const TransferObjects& o, const Insertion& x, const Insertion& y) {
  const ComplexMatrix ex = window_transfer(o, x);
  const ComplexMatrix ey = window_transfer(o, y);
  const Complex mx = o.L.transpose() * ex * o.R;
  const Complex my = o.L.transpose() * ey * o.R;
  Complex total = 0.0;
  for (int r = 1 - y.cells; r < x.cells; ++r) total += window_expectation(o, combine(x, y, r)) - mx * my;
  total += Complex(o.L.transpose() * ex * o.Tinv * ey * o.R);
  total += Complex(o.L.transpose() * ey * o.Tinv * ex * o.R);
  return total;
}

// Site-level density expressed as operator windows over blocked cells.
inline std::vector<Insertion> cell_insertions(const OperatorDensity& density, int sites_per_cell) {
  require(density.unit_cell == sites_per_cell, ErrorKind::DimensionMismatch,
          "density unit cell differs from the MPS unit cell");
  const int n = sites_per_cell;
  auto floor_div = [](int a, int b) { return (a >= 0) ? a / b : -((-a + b - 1) / b); };
  std::map<std::pair<int, int>, ComplexMatrix> merged;
  for (const auto& t : density.terms) {
    const int c0 = floor_div(t.op.offset, n);
    const int c1 = floor_div(t.op.end() + n - 1, n);
    const auto e = embed(t.op, c0 * n, (c1 - c0) * n);
    auto key = std::make_pair(c0, c1 - c0);
    auto it = merged.find(key);
    if (it == merged.end())
      merged[key] = t.coefficient * e.matrix;
    else
      it->second += t.coefficient * e.matrix;
  }
  std::vector<Insertion> out;
  for (const auto& [key, m] : merged) out.push_back(operator_insertion(key.second, m));
  return out;
}

inline Complex expectation_complex(const TransferObjects& o, const OperatorDensity& density) {
  Complex total = 0.0;
  for (const auto& x : cell_insertions(density, o.sites_per_cell)) total += window_expectation(o, x);
  return total;
}

// Per unit cell.
inline double expectation(const UniformMPS& mps, const OperatorDensity& density) {
  const auto o = build_transfer_objects(mps);
  const Complex v = expectation_complex(o, density);
  return v.real();
}

inline Complex connected_two_point_complex(const TransferObjects& o, const OperatorDensity& a,
                                           const OperatorDensity& b) {
  const auto xs = cell_insertions(a, o.sites_per_cell);
  const auto ys = cell_insertions(b, o.sites_per_cell);
  Complex total = 0.0;
  for (const auto& x : xs)
    for (const auto& y : ys) total += connected_sum(o, x, y);
  return total;
}

// Extensive connected correlator per unit cell.  Real for a = b; otherwise the real part.
inline double connected_two_point(const UniformMPS& mps, const OperatorDensity& a, const OperatorDensity& b) {
  return connected_two_point_complex(build_transfer_objects(mps), a, b).real();
}

inline SiteTensor blocked_tangent(const TransferObjects& o, const UniformMPS& mps,
                                  const std::vector<SiteTensor>& tangent) {
  require(static_cast<int>(tangent.size()) == mps.unit_cell(), ErrorKind::DimensionMismatch,
          "tangent must supply one tensor per site of the unit cell");
  return scaled(block_tangent(mps.sites, tangent), o.tensor_factor);
}

// <dA| O |psi>_c per unit cell, or <dA|dB>_c when `op` is empty.
inline Complex tangent_overlap(const TransferObjects& o, const SiteTensor& bra_tangent,
                               const std::optional<OperatorDensity>& op,
                               const std::optional<SiteTensor>& ket_tangent = std::nullopt) {
  const Insertion x = bra_tangent_insertion(bra_tangent);
  if (!op) return connected_sum(o, x, ket_tangent_insertion(ket_tangent ? *ket_tangent : bra_tangent));
  Complex total = 0.0;
  for (const auto& y : cell_insertions(*op, o.sites_per_cell)) total += connected_sum(o, x, y);
  return total;
}

inline Complex tangent_overlaps(const UniformMPS& mps, const std::vector<SiteTensor>& tangent,
                                const std::optional<OperatorDensity>& op) {
  const auto o = build_transfer_objects(mps);
  return tangent_overlap(o, blocked_tangent(o, mps, tangent), op);
}

// Amplitudes on a periodic ring of `basis.length` sites, normalized.
inline ComplexVector dense_state(const UniformMPS& mps, const ChainBasis& basis) {
  mps.validate();
  require(basis.boundary == Boundary::Periodic, ErrorKind::InvalidArgument, "dense states need a ring");
  require(mps.d == 2, ErrorKind::DimensionMismatch, "dense states are for spin one-half");
  const int n = mps.unit_cell();
  require(basis.length % n == 0, ErrorKind::DimensionMismatch, "ring length must be a multiple of the cell");
  ComplexVector psi(basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i) {
    const auto s = basis.states[static_cast<std::size_t>(i)];
    ComplexMatrix m = mps.sites[0][static_cast<std::size_t>(basis.bit(s, 0))];
    for (int j = 1; j < basis.length; ++j) m = m * mps.sites[static_cast<std::size_t>(j % n)][static_cast<std::size_t>(basis.bit(s, j))];
    psi[i] = m.trace();
  }
  const double nrm = psi.norm();
  require(nrm > 0.0, ErrorKind::InvalidArgument, "state vanishes on this ring");
  return psi / nrm;
}

}  // namespace mpsteer
