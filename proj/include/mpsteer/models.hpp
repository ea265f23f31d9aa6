#pragma once

#include <algorithm>
#include <string>

#include "mpsteer/operators.hpp"

namespace mpsteer {

// Named local generators A_eta; the control Hamiltonian is sum_eta c_eta A_eta.
struct ControlSet {
  std::vector<std::string> labels;
  std::vector<OperatorDensity> generators;

  std::size_t size() const { return generators.size(); }
  int unit_cell() const { return generators.empty() ? 1 : generators.front().unit_cell; }

  void validate() const {
    require(!generators.empty() && labels.size() == generators.size(), ErrorKind::InvalidArgument,
            "control set needs one label per generator");
    for (const auto& g : generators)
      require(g.unit_cell == unit_cell(), ErrorKind::DimensionMismatch, "controls disagree on the unit cell");
  }

  OperatorDensity combine(const RealVector& c) const { return linear_combination(generators, c); }
};

// Samples of the control amplitudes, linearly interpolated and held constant outside the sampled range.
struct ControlSchedule {
  std::vector<double> times;
  std::vector<RealVector> amplitudes;

  bool empty() const { return times.empty(); }

  RealVector at(double t) const {
    require(!times.empty() && times.size() == amplitudes.size(), ErrorKind::InvalidArgument, "empty control schedule");
    if (t <= times.front()) return amplitudes.front();
    if (t >= times.back()) return amplitudes.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - w) * amplitudes[lo] + w * amplitudes[hi];
  }

  static ControlSchedule constant(const RealVector& c) { return {{0.0}, {c}}; }
};

// P X P centred on the first and on the second site of the two-site cell.
inline ControlSet pxp_controls() {
  using namespace pauli;
  const LocalOperator pxp = product_operator({down(), x(), down()});
  ControlSet cs;
  cs.labels = {"c1", "c2"};
  cs.generators.push_back(OperatorDensity(2).add(1.0, shifted(pxp, -1)));
  cs.generators.push_back(OperatorDensity(2).add(1.0, pxp));
  return cs;
}

inline ControlSet tlfim_controls(bool with_zy = false) {
  using namespace pauli;
  ControlSet cs;
  cs.labels = {"ZZ", "Z", "X"};
  cs.generators.push_back(OperatorDensity(1).add(1.0, product_operator({z(), z()})));
  cs.generators.push_back(OperatorDensity(1).add(1.0, site_operator(z())));
  cs.generators.push_back(OperatorDensity(1).add(1.0, site_operator(x())));
  if (with_zy) {
    cs.labels.push_back("ZY");
    cs.generators.push_back(
        OperatorDensity(1).add(0.5, product_operator({z(), y()})).add(0.5, product_operator({y(), z()})));
  }
  return cs;
}

inline OperatorDensity tlfim_hamiltonian(double j = 1.0, double hz = 0.4, double hx = 1.0) {
  using namespace pauli;
  OperatorDensity h(1);
  h.add(j, product_operator({z(), z()}));
  h.add(hz, site_operator(z()));
  h.add(hx, site_operator(x()));
  return h;
}

inline OperatorDensity pxp_hamiltonian(double c1 = 1.0, double c2 = 1.0) {
  const auto cs = pxp_controls();
  RealVector c(2);
  c << c1, c2;
  return cs.combine(c);
}

}  // namespace mpsteer
