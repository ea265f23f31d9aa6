#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "mpsteer/tdvp.hpp"
#include "mpsteer/trajopt.hpp"

namespace mpsteer {

// Plain columnar text: '#'-prefixed header lines, then one whitespace-separated row per sample.
// Numbers are written with 12 significant digits so repeated runs are byte-identical.

inline std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

using Meta = std::vector<std::pair<std::string, std::string>>;

inline void write_header(std::ostream& os, const std::string& kind, const Meta& meta,
                         const std::vector<std::string>& columns) {
  os << "# mpsteer " << kind << "\n";
  for (const auto& [k, v] : meta) os << "# " << k << ": " << v << "\n";
  os << "# columns:";
  for (const auto& c : columns) os << ' ' << c;
  os << "\n";
}

inline void write_row(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? " " : "") << fmt_number(values[i]);
  os << "\n";
}

// t, c_<label>..., delta2 (per site, per unit time squared), Delta2 (dimensionless)
inline void write_schedule(std::ostream& os, const SteeringSolution& s, const Meta& meta) {
  std::vector<std::string> cols{"t"};
  for (const auto& l : s.labels) cols.push_back("c_" + l);
  cols.push_back("delta2");
  cols.push_back("Delta2");
  write_header(os, "schedule", meta, cols);
  for (const auto& p : s.samples) {
    std::vector<double> row{p.t};
    for (Eigen::Index k = 0; k < p.c.size(); ++k) row.push_back(p.c[k]);
    row.push_back(p.leakage);
    row.push_back(p.rescaled);
    write_row(os, row);
  }
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
};

// Reads a file in the format above; `kind` must match the first header line.
inline Table read_table(std::istream& is, const std::string& kind, const std::string& name) {
  Table out;
  std::string line;
  bool have_columns = false, have_kind = false;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (lineno == 1) have_kind = line == "# mpsteer " + kind;
      const std::string tag = "# columns:";
      if (line.rfind(tag, 0) == 0) {
        std::istringstream cs(line.substr(tag.size()));
        std::string c;
        while (cs >> c) out.columns.push_back(c);
        have_columns = true;
      }
      continue;
    }
    require(have_kind && have_columns, ErrorKind::IoError, name + ": not a " + kind + " file");
    std::istringstream rs(line);
    std::vector<double> v;
    std::string tok;
    while (rs >> tok) {
      try {
        v.push_back(std::stod(tok));
      } catch (const std::exception&) {
        fail(ErrorKind::IoError, name + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
    }
    require(v.size() == out.columns.size(), ErrorKind::IoError,
            name + ":" + std::to_string(lineno) + ": expected " + std::to_string(out.columns.size()) + " columns");
    out.rows.push_back(std::move(v));
  }
  require(have_kind && have_columns, ErrorKind::IoError, name + ": not a " + kind + " file");
  return out;
}

inline Table read_table_file(const std::string& path, const std::string& kind) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::IoError, "cannot open " + path);
  return read_table(f, kind, path);
}

struct LoadedSchedule {
  std::vector<std::string> labels;
  ControlSchedule schedule;
};

inline LoadedSchedule schedule_from_table(const Table& t) {
  LoadedSchedule out;
  require(t.column("t") == 0, ErrorKind::IoError, "schedule without a leading t column");
  std::vector<int> idx;
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i].rfind("c_", 0) == 0) {
      out.labels.push_back(t.columns[i].substr(2));
      idx.push_back(static_cast<int>(i));
    }
  for (const auto& r : t.rows) {
    out.schedule.times.push_back(r[0]);
    RealVector c(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) c[static_cast<Eigen::Index>(k)] = r[static_cast<std::size_t>(idx[k])];
    out.schedule.amplitudes.push_back(c);
  }
  return out;
}

// Samples written by write_trajectory: t, x1..xn, v1..vn.
inline SampledTrajectory trajectory_from_table(const Table& t) {
  const auto n = static_cast<Eigen::Index>((t.columns.size() - 1) / 2);
  require(n >= 1 && t.columns.size() == static_cast<std::size_t>(2 * n + 1) && t.column("t") == 0,
          ErrorKind::IoError, "trajectory needs columns t, x1..xn, v1..vn");
  require(t.rows.size() >= 2, ErrorKind::IoError, "trajectory needs at least two samples");
  std::vector<double> ts;
  std::vector<Params> xs, vs;
  for (const auto& r : t.rows) {
    ts.push_back(r[0]);
    Params x(n), v(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      x[j] = r[static_cast<std::size_t>(1 + j)];
      v[j] = r[static_cast<std::size_t>(1 + n + j)];
    }
    xs.push_back(x);
    vs.push_back(v);
  }
  return SampledTrajectory(std::move(ts), std::move(xs), std::move(vs));
}

// t, fidelity density -log|<target|psi>|^2 per site, entropies of the two bond cuts (nats), truncated weight
inline void write_evolution(std::ostream& os, const std::vector<EvolutionRecord>& rec, const Meta& meta) {
  write_header(os, "evolution", meta, {"t", "fidelity_density", "S_internal", "S_cell", "truncation"});
  for (const auto& r : rec) write_row(os, {r.t, r.fidelity, r.entropy1, r.entropy2, r.truncation});
}

struct ConvergenceRow {
  double dt = 0.0;
  double final_fidelity = 0.0;
};

// dt, final fidelity density, change from the previous (larger) step, ratio of successive changes
inline void write_convergence(std::ostream& os, const std::vector<ConvergenceRow>& rows, const Meta& meta) {
  write_header(os, "dt-convergence", meta, {"dt", "final_fidelity_density", "change", "ratio"});
  const double nan = std::nan("");
  double prev_change = nan;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double change = i ? std::abs(rows[i].final_fidelity - rows[i - 1].final_fidelity) : nan;
    write_row(os, {rows[i].dt, rows[i].final_fidelity, change, i > 1 ? prev_change / change : nan});
    prev_change = change;
  }
}

// theta1, theta2 (rad), min/max of Delta2 over directions, their angles phi (rad), singular flag
inline void write_landscape(std::ostream& os, const std::vector<LandscapePoint>& pts, const Meta& meta) {
  write_header(os, "landscape", meta,
               {"theta1", "theta2", "Delta2_min", "Delta2_max", "phi_min", "phi_max", "singular"});
  for (const auto& p : pts)
    write_row(os, {p.theta1, p.theta2, p.min_value, p.max_value, p.min_angle, p.max_angle, p.singular ? 1.0 : 0.0});
}

// t, parameters x_j, velocities v_j
inline void write_trajectory(std::ostream& os, const SampledTrajectory& tr, const Meta& meta) {
  std::vector<std::string> cols{"t"};
  const auto n = tr.points().front().size();
  for (Eigen::Index j = 0; j < n; ++j) cols.push_back("x" + std::to_string(j + 1));
  for (Eigen::Index j = 0; j < n; ++j) cols.push_back("v" + std::to_string(j + 1));
  write_header(os, "trajectory", meta, cols);
  for (std::size_t i = 0; i < tr.times().size(); ++i) {
    std::vector<double> row{tr.times()[i]};
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(tr.points()[i][j]);
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(tr.velocities()[i][j]);
    write_row(os, row);
  }
}

// candidates in evaluation order: e2, objective, midpoint entropy (nats), final fidelity density
inline void write_trajopt(std::ostream& os, const DeformationReport& rep, Meta meta) {
  meta.push_back({"e1", fmt_number(rep.e1)});
  meta.push_back({"best_e2", fmt_number(rep.best.e2)});
  meta.push_back({"best_objective", fmt_number(rep.best.objective)});
  meta.push_back({"status", rep.no_improvement ? "NoImprovement" : "ok"});
  write_header(os, "trajopt", meta, {"e2", "objective", "S_mid", "final_fidelity_density"});
  for (const auto& c : rep.candidates) write_row(os, {c.e2, c.objective, c.midpoint_entropy, c.final_fidelity});
}

}  // namespace mpsteer
