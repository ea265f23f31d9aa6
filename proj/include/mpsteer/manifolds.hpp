#pragma once

#include <functional>
#include <memory>
#include <string>

#include "mpsteer/mps.hpp"

namespace mpsteer {

using Params = Eigen::VectorXd;

class Manifold {
 public:
  virtual ~Manifold() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual UniformMPS mps(const Params& x) const = 0;

  // Per-site derivative tensors along velocity v.  Default: central differences.
  virtual std::vector<SiteTensor> tangent(const Params& x, const Params& v) const {
    const double h = 1e-6;
    const auto p = mps(x + h * v).sites;
    const auto m = mps(x - h * v).sites;
    std::vector<SiteTensor> out = p;
    for (std::size_t k = 0; k < out.size(); ++k)
      for (std::size_t s = 0; s < out[k].size(); ++s) out[k][s] = (p[k][s] - m[k][s]) / (2 * h);
    return out;
  }

  // Parameter distance with the state-periodicity of each coordinate taken into account.
  virtual double distance(const Params& a, const Params& b) const { return (a - b).norm(); }

  void check(const Params& x) const {
    require(x.size() == dim(), ErrorKind::DimensionMismatch, name() + ": wrong parameter count");
    for (Eigen::Index i = 0; i < x.size(); ++i)
      require(std::isfinite(x[i]), ErrorKind::InvalidArgument, name() + ": non-finite parameter");
  }
};

// Two-site cell of the constrained chain: sites alternate between angles theta1 and theta2.
class PxpManifold final : public Manifold {
 public:
  std::string name() const override { return "pxp"; }
  int dim() const override { return 2; }

  static SiteTensor site(double th) {
    SiteTensor m(2, ComplexMatrix::Zero(2, 2));
    m[0](0, 0) = std::cos(th);
    m[0](1, 0) = 1.0;
    m[1](0, 1) = I * std::sin(th);
    return m;
  }
  static SiteTensor dsite(double th, double v) {
    SiteTensor m(2, ComplexMatrix::Zero(2, 2));
    m[0](0, 0) = -std::sin(th) * v;
    m[1](0, 1) = I * std::cos(th) * v;
    return m;
  }

  UniformMPS mps(const Params& x) const override {
    check(x);
    return UniformMPS{2, {site(x[0]), site(x[1])}};
  }
  std::vector<SiteTensor> tangent(const Params& x, const Params& v) const override {
    check(x);
    check(v);
    return {dsite(x[0], v[0]), dsite(x[1], v[1])};
  }
};

// Single-site ansatz with angles (a, b, c, d); the state is 2*pi periodic in every angle.
class IsingManifold final : public Manifold {
 public:
  std::string name() const override { return "tlfim"; }
  int dim() const override { return 4; }

  // Starting point of the periodic orbit of J = 1, h_x = 1, h_z = 0.4.
  static Params seed() { return (Params(4) << 0.2607, 0.9, 4.888, 0.4308).finished(); }

  static SiteTensor site(const Params& x) {
    const double a = x[0], b = x[1], c = x[2], d = x[3];
    const double cd = std::cos(d), sd = std::sin(d), cb = std::cos(b), sb = std::sin(b);
    SiteTensor m(2, ComplexMatrix::Zero(2, 2));
    ComplexMatrix& up = m[1];
    ComplexMatrix& dn = m[0];
    up(0, 0) = cd * cb * std::exp(I * (a / 2));
    up(0, 1) = cd * sb * std::exp(-I * (a / 2));
    dn(1, 0) = sd * sb * std::exp(I * (c - a / 2));
    dn(1, 1) = sd * cb * std::exp(I * (c + a / 2));
    return m;
  }

  static SiteTensor dsite(const Params& x, const Params& v) {
    const double a = x[0], b = x[1], c = x[2], d = x[3];
    const double cd = std::cos(d), sd = std::sin(d), cb = std::cos(b), sb = std::sin(b);
    const Complex ea = std::exp(I * (a / 2)), eam = std::exp(-I * (a / 2));
    const Complex e1 = std::exp(I * (c - a / 2)), e2 = std::exp(I * (c + a / 2));
    SiteTensor m(2, ComplexMatrix::Zero(2, 2));
    m[1](0, 0) = (-sd * cb * v[3] - cd * sb * v[1] + cd * cb * I * 0.5 * v[0]) * ea;
    m[1](0, 1) = (-sd * sb * v[3] + cd * cb * v[1] - cd * sb * I * 0.5 * v[0]) * eam;
    m[0](1, 0) = (cd * sb * v[3] + sd * cb * v[1] + sd * sb * I * (v[2] - 0.5 * v[0])) * e1;
    m[0](1, 1) = (cd * cb * v[3] - sd * sb * v[1] + sd * cb * I * (v[2] + 0.5 * v[0])) * e2;
    return m;
  }

  UniformMPS mps(const Params& x) const override {
    check(x);
    return UniformMPS{2, {site(x)}};
  }
  std::vector<SiteTensor> tangent(const Params& x, const Params& v) const override {
    check(x);
    check(v);
    return {dsite(x, v)};
  }
  double distance(const Params& a, const Params& b) const override {
    Params d = a - b;
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = wrap_angle(d[i]);
    return d.norm();
  }
};

// Cubic Hermite interpolation through samples of position and velocity.
class SampledTrajectory {
 public:
  SampledTrajectory() = default;
  SampledTrajectory(std::vector<double> t, std::vector<Params> x, std::vector<Params> v)
      : t_(std::move(t)), x_(std::move(x)), v_(std::move(v)) {
    require(t_.size() >= 2 && x_.size() == t_.size() && v_.size() == t_.size(), ErrorKind::InvalidArgument,
            "trajectory needs at least two matching samples");
    for (std::size_t i = 1; i < t_.size(); ++i)
      require(t_[i] > t_[i - 1], ErrorKind::InvalidArgument, "trajectory times must increase");
  }

  double t0() const { return t_.front(); }
  double t1() const { return t_.back(); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<Params>& points() const { return x_; }
  const std::vector<Params>& velocities() const { return v_; }

  Params point(double t) const { return eval(t, false); }
  Params velocity(double t) const { return eval(t, true); }

 private:
  Params eval(double t, bool derivative) const {
    require(t >= t_.front() - 1e-12 && t <= t_.back() + 1e-12, ErrorKind::InvalidArgument,
            "time outside the trajectory");
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = (it == t_.begin()) ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
    i = std::min(i, t_.size() - 2);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    if (!derivative) {
      const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
      const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
      return h00 * x_[i] + h10 * h * v_[i] + h01 * x_[i + 1] + h11 * h * v_[i + 1];
    }
    const double d00 = (6 * s * s - 6 * s) / h, d10 = 3 * s * s - 4 * s + 1;
    const double d01 = (-6 * s * s + 6 * s) / h, d11 = 3 * s * s - 2 * s;
    return d00 * x_[i] + d10 * v_[i] + d01 * x_[i + 1] + d11 * v_[i + 1];
  }

  std::vector<double> t_;
  std::vector<Params> x_, v_;
};

// A curve x(t) on a manifold with its velocity.
struct Trajectory {
  double t0 = 0.0, t1 = 1.0;
  std::function<Params(double)> point;
  std::function<Params(double)> velocity;

  static Trajectory from_samples(const SampledTrajectory& s) {
    auto p = std::make_shared<SampledTrajectory>(s);
    return Trajectory{s.t0(), s.t1(), [p](double t) { return p->point(t); },
                      [p](double t) { return p->velocity(t); }};
  }
};

// Linear schedule T = t / tau.  `arc` is the fraction of the closed circle swept while T runs from 0 to 1:
// 1 for the full loop Z2 -> Z2' -> Z2, 0.5 for the quarter-circle segment Z2 -> Z2'.
struct Schedule {
  double tau = 1.0;
  double arc = 1.0;
  double T(double t) const { return t / tau; }
  double dT() const { return 1.0 / tau; }
};

// Circle between the two Neel states, optionally deformed radially by
// d(T) = 1 - e1 (1 - cos 2 pi T) - e2 (1 - cos 4 pi T), with polar angle pi * arc * T.
inline Trajectory deformed_trajectory(double e1, double e2, Schedule sch = {}) {
  require(sch.tau > 0, ErrorKind::InvalidArgument, "schedule duration must be positive");
  require(sch.arc > 0, ErrorKind::InvalidArgument, "arc fraction must be positive");
  auto d = [=](double T) { return 1 - e1 * (1 - std::cos(2 * M_PI * T)) - e2 * (1 - std::cos(4 * M_PI * T)); };
  auto dd = [=](double T) { return -2 * M_PI * e1 * std::sin(2 * M_PI * T) - 4 * M_PI * e2 * std::sin(4 * M_PI * T); };
  const double w = M_PI * sch.arc;
  Trajectory tr;
  tr.t0 = 0.0;
  tr.t1 = sch.tau;
  tr.point = [=](double t) {
    const double T = sch.T(t);
    Params x(2);
    x << M_PI / 2 * (d(T) * std::sin(w * T) - 1), M_PI / 2 * (d(T) * std::cos(w * T) + 1);
    return x;
  };
  tr.velocity = [=](double t) {
    const double T = sch.T(t);
    Params v(2);
    v << M_PI / 2 * (dd(T) * std::sin(w * T) + d(T) * w * std::cos(w * T)),
        M_PI / 2 * (dd(T) * std::cos(w * T) - d(T) * w * std::sin(w * T));
    return Params(v * sch.dT());
  };
  return tr;
}

inline Trajectory circle_trajectory(Schedule sch = {}) { return deformed_trajectory(0.0, 0.0, sch); }

}  // namespace mpsteer
