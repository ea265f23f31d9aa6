#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>
#include <limits>
#include <sstream>

#include "mpsteer/errors.hpp"

namespace mpsteer {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex I{0.0, 1.0};

enum class Side { Left, Right };

struct Eigenpair {
  Complex value;
  ComplexVector vector;  // Right: M v = value v.  Left: v^T M = value v^T.
  double gap = 0.0;      // (|l1| - |l2|) / |l1|
};

namespace detail {

inline constexpr Eigen::Index kDenseEigenLimit = 4096;

inline Eigenpair dense_dominant(const ComplexMatrix& m, double gap_tol) {
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, true);
  require(es.info() == Eigen::Success, ErrorKind::DegenerateSpectrum, "eigen solver did not converge");
  const auto& ev = es.eigenvalues();
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i]) > std::abs(ev[best])) best = i;
  double second = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (i != best) second = std::max(second, std::abs(ev[i]));
  const double top = std::abs(ev[best]);
  require(top > 0.0, ErrorKind::DegenerateSpectrum, "spectral radius is zero");
  Eigenpair out{ev[best], es.eigenvectors().col(best), (top - second) / top};
  if (out.gap < gap_tol) {
    std::ostringstream os;
    os << "leading moduli " << top << " and " << second << " are not separated";
    fail(ErrorKind::DegenerateSpectrum, os.str());
  }
  out.vector.normalize();
  return out;
}

// Shifted power iteration for matrices too large for a dense solve.
inline Eigenpair power_dominant(const ComplexMatrix& m, double gap_tol) {
  const Eigen::Index n = m.rows();
  ComplexVector v = ComplexVector::Constant(n, Complex(1.0, 0.37));
  v.normalize();
  Complex lambda = 0.0;
  for (int it = 0; it < 20000; ++it) {
    ComplexVector w = m * v;
    const Complex next = v.dot(w);
    const double nw = w.norm();
    require(nw > 0.0, ErrorKind::DegenerateSpectrum, "power iteration collapsed");
    const double res = (w - next * v).norm() / std::max(1e-300, std::abs(next));
    v = w / nw;
    lambda = next;
    if (res < 1e-13) break;
  }
  const double res = (m * v - lambda * v).norm() / std::abs(lambda);
  if (res > 1e-8) fail(ErrorKind::DegenerateSpectrum, "power iteration did not converge");
  (void)gap_tol;
  return Eigenpair{lambda, v, std::numeric_limits<double>::quiet_NaN()};  // gap not estimated
}

}  // namespace detail

inline Eigenpair dominant_eigenpair(const ComplexMatrix& m, Side side, double gap_tol = 1e-10) {
  require(m.rows() == m.cols() && m.rows() > 0, ErrorKind::DimensionMismatch, "matrix must be square");
  const ComplexMatrix a = (side == Side::Right) ? m : ComplexMatrix(m.transpose());
  if (a.rows() <= detail::kDenseEigenLimit) return detail::dense_dominant(a, gap_tol);
  return detail::power_dominant(a, gap_tol);
}

// Q (1 - Q M Q)^{-1} Q with Q = 1 - P.  P must be a projector.
inline ComplexMatrix pseudo_inverse_on_complement(const ComplexMatrix& m, const ComplexMatrix& p) {
  require(m.rows() == m.cols() && p.rows() == m.rows() && p.cols() == m.cols(),
          ErrorKind::DimensionMismatch, "pseudo-inverse operands must be square and conformal");
  const Eigen::Index n = m.rows();
  const double pn = std::max(1.0, p.norm());
  require((p * p - p).norm() < 1e-9 * pn, ErrorKind::InvalidArgument, "P is not idempotent");
  const ComplexMatrix q = ComplexMatrix::Identity(n, n) - p;
  const ComplexMatrix k = ComplexMatrix::Identity(n, n) - q * m * q;
  Eigen::FullPivLU<ComplexMatrix> lu(k);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) fail(ErrorKind::SingularComplement, "1 - QMQ is singular on the complement");
  return q * lu.solve(q);
}

// Moore-Penrose inverse of a symmetric matrix, dropping eigenvalues below rel_cutoff * max|eig|.
inline RealMatrix symmetric_pinv(const RealMatrix& a, double rel_cutoff = 1e-12, Eigen::Index* rank = nullptr) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (a + a.transpose()));
  const RealVector& w = es.eigenvalues();
  const double top = w.cwiseAbs().maxCoeff();
  RealVector inv = RealVector::Zero(w.size());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (top > 0.0 && std::abs(w[i]) > rel_cutoff * top) {
      inv[i] = 1.0 / w[i];
      ++r;
    }
  if (rank) *rank = r;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

inline ComplexMatrix hermitian_function(const ComplexMatrix& h, const auto& f) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (h + h.adjoint()));
  ComplexVector fw(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < fw.size(); ++i) fw[i] = f(es.eigenvalues()[i]);
  return es.eigenvectors() * fw.asDiagonal() * es.eigenvectors().adjoint();
}

// exp(-i t H) for Hermitian H.
inline ComplexMatrix unitary_exp(const ComplexMatrix& h, double t) {
  return hermitian_function(h, [t](double w) { return std::exp(Complex(0.0, -t * w)); });
}


inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double wrap_angle(double x) {
  const double two_pi = 2.0 * M_PI;
  x = std::fmod(x, two_pi);
  if (x > M_PI) x -= two_pi;
  if (x <= -M_PI) x += two_pi;
  return x;
}

}  // namespace mpsteer
