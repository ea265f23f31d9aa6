// mpsteer: steering schedules, iTEBD benchmarks, leakage landscapes, deformation searches,
// TDVP orbits and parent-Hamiltonian checks, each driven by one YAML config.

#include <CLI11.hpp>

#include <iostream>
#include <random>

#include "config.hpp"
#include "mpsteer/io.hpp"
#include "mpsteer/parent.hpp"

namespace mpsteer::cli {
namespace {

struct Overrides {
  std::string config, out;
  int jobs = 0, chi = 0;
  double dt = 0.0;
  bool dry_run = false;
};

// Everything a command needs, assembled from the config.  The TDVP orbit is only integrated when
// `compute` is set, so dry runs stay cheap.
struct Experiment {
  ExperimentConfig cfg;
  std::unique_ptr<Manifold> manifold;
  std::unique_ptr<ParentFamily> parent;
  OperatorDensity hamiltonian{1};
  ControlSet controls;
  std::optional<SampledTrajectory> flow;
  ReturnPoint ret;
  Trajectory trajectory;

  SteeringProblem problem() const {
    return {manifold.get(), trajectory, controls, parent.get(), cfg.model == Model::Pxp};
  }

  Meta meta() const {
    Meta m{{"config", cfg.file}, {"model", cfg.model == Model::Pxp ? "pxp" : "tlfim"}};
    const auto& t = cfg.trajectory;
    switch (t.family) {
      case Family::Circle:
      case Family::Deformed:
        m.push_back({"trajectory", "deformed circle e1=" + fmt_number(t.e1) + " e2=" + fmt_number(t.e2) +
                                       " tau=" + fmt_number(t.tau) + " arc=" + fmt_number(t.arc)});
        break;
      case Family::Tdvp:
        m.push_back({"trajectory", "tdvp orbit, end t=" + fmt_number(trajectory.t1)});
        break;
      case Family::Samples: m.push_back({"trajectory", "samples from " + t.samples}); break;
    }
    return m;
  }
};

Params seed_of(const ExperimentConfig& c) {
  if (!c.trajectory.seed.empty())
    return Eigen::Map<const Params>(c.trajectory.seed.data(), static_cast<Eigen::Index>(c.trajectory.seed.size()));
  if (c.model == Model::Tlfim) return IsingManifold::seed();
  return (Params(2) << -M_PI / 2 + 0.3, M_PI - 0.3).finished();
}

Experiment build(const ExperimentConfig& cfg, bool compute) {
  Experiment e;
  e.cfg = cfg;
  if (cfg.model == Model::Pxp) {
    e.manifold = std::make_unique<PxpManifold>();
    e.parent = std::make_unique<PxpParentFamily>();
    e.controls = pxp_controls();
    e.hamiltonian = pxp_hamiltonian(cfg.couplings[0], cfg.couplings[1]);
  } else {
    e.manifold = std::make_unique<IsingManifold>();
    e.controls = tlfim_controls(cfg.with_zy);
    e.hamiltonian = tlfim_hamiltonian(cfg.couplings[0], cfg.couplings[1], cfg.couplings[2]);
    const auto lam = cfg.lambdas.empty() ? std::vector<double>{1, 1, 1, 16} : cfg.lambdas;
    e.parent = std::make_unique<GeneralParentFamily>(*e.manifold, 3, lam);
  }

  const auto& t = cfg.trajectory;
  switch (t.family) {
    case Family::Circle:
    case Family::Deformed:
      if (t.tau == 0.0) {
        e.trajectory = deformed_trajectory(t.e1, t.e2, {1.0, t.arc});
        e.trajectory.t1 = e.trajectory.t0;
      } else {
        e.trajectory = deformed_trajectory(t.e1, t.e2, {t.tau, t.arc});
      }
      break;
    case Family::Tdvp: {
      if (!compute) break;
      const int steps = static_cast<int>(std::ceil(t.flow_t_max / t.flow_dt - 1e-9));
      e.flow = tdvp_flow(*e.manifold, e.hamiltonian, seed_of(cfg), t.flow_dt, steps);
      e.ret = closest_return(*e.manifold, *e.flow, t.return_after);
      e.trajectory = Trajectory::from_samples(*e.flow);
      e.trajectory.t1 = t.end >= 0 ? std::min(t.end, e.flow->t1()) : e.ret.t;
      break;
    }
    case Family::Samples: {
      const auto tab = read_table_file(t.samples, "trajectory");
      const auto s = trajectory_from_table(tab);
      require(s.points().front().size() == e.manifold->dim(), ErrorKind::ConfigError,
              t.samples + ": trajectory dimension does not match the model");
      e.trajectory = Trajectory::from_samples(s);
      if (t.end >= 0) e.trajectory.t1 = std::min(t.end, s.t1());
      break;
    }
  }
  return e;
}

EvolutionOptions evolution_options(const ExperimentConfig& c) {
  EvolutionOptions o;
  o.chi_max = c.evolution.chi_max;
  o.dt = c.evolution.dt;
  o.record_every = c.evolution.record_every;
  return o;
}

Method method_of(const ExperimentConfig& c) { return *parse_method(c.method); }

void emit(const ExperimentConfig& c, const std::string& text) {
  if (c.output.empty() || c.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(c.output, std::ios::binary);
  require(f.good(), ErrorKind::IoError, "cannot write " + c.output);
  f << text;
  require(f.good(), ErrorKind::IoError, "write failed for " + c.output);
}

int cmd_steer(const Experiment& e) {
  std::ostringstream os;
  const auto sol = steer(e.problem(), method_of(e.cfg), e.cfg.intervals, e.cfg.jobs);
  Meta m = e.meta();
  m.push_back({"method", e.cfg.method});
  m.push_back({"intervals", std::to_string(e.cfg.intervals)});
  write_schedule(os, sol, m);
  emit(e.cfg, os.str());
  return 0;
}

ControlSchedule schedule_for(const Experiment& e) {
  const auto& c = e.cfg;
  if (c.evolution.protocol == ProtocolKind::Static) {
    RealVector amp = RealVector::Zero(static_cast<Eigen::Index>(e.controls.size()));
    for (std::size_t k = 0; k < c.couplings.size(); ++k) amp[static_cast<Eigen::Index>(k)] = c.couplings[k];
    return ControlSchedule::constant(amp);
  }
  if (!c.evolution.schedule.empty()) {
    const auto loaded = schedule_from_table(read_table_file(c.evolution.schedule, "schedule"));
    require(loaded.labels == e.controls.labels, ErrorKind::ConfigError,
            c.evolution.schedule + ": schedule controls do not match the model's controls");
    require(!loaded.schedule.empty(), ErrorKind::ConfigError, c.evolution.schedule + ": empty schedule");
    return loaded.schedule;
  }
  auto s = steer(e.problem(), method_of(c), c.intervals, c.jobs).schedule();
  require(!s.empty(), ErrorKind::InvalidArgument, "zero-length trajectory: nothing to evolve");
  return s;
}

int cmd_evolve(const Experiment& e) {
  const auto sched = schedule_for(e);
  Meta m = e.meta();
  m.push_back({"protocol", e.cfg.evolution.protocol == ProtocolKind::Static ? "static" : e.cfg.method});
  m.push_back({"chi_max", std::to_string(e.cfg.evolution.chi_max)});
  std::ostringstream os;
  if (!e.cfg.evolution.dt_sweep.empty()) {
    std::vector<ConvergenceRow> rows;
    for (double dt : e.cfg.evolution.dt_sweep) {
      auto o = evolution_options(e.cfg);
      o.dt = dt;
      o.record_every = std::numeric_limits<int>::max();
      rows.push_back({dt, evolve_along(e.problem(), sched, o).back().fidelity});
    }
    write_convergence(os, rows, m);
  } else {
    m.push_back({"dt", fmt_number(e.cfg.evolution.dt)});
    write_evolution(os, evolve_along(e.problem(), sched, evolution_options(e.cfg)), m);
  }
  emit(e.cfg, os.str());
  return 0;
}

int cmd_landscape(const Experiment& e) {
  require(e.cfg.model == Model::Pxp, ErrorKind::ConfigError, "landscape is defined for the pxp model only");
  const auto& b = e.cfg.landscape.box;
  const auto pts = leakage_landscape({b[0], b[1], b[2], b[3]}, e.cfg.landscape.resolution, e.controls,
                                     e.cfg.landscape.angles, e.cfg.jobs);
  Meta m{{"config", e.cfg.file}, {"resolution", std::to_string(e.cfg.landscape.resolution)},
         {"angles", std::to_string(e.cfg.landscape.angles)}};
  std::ostringstream os;
  write_landscape(os, pts, m);
  emit(e.cfg, os.str());
  return 0;
}

int cmd_trajopt(const Experiment& e) {
  const auto& c = e.cfg;
  require(c.model == Model::Pxp, ErrorKind::ConfigError, "trajopt deforms the pxp circle only");
  const TrajectoryObjective obj{*parse_objective(c.trajopt.objective), c.trajopt.entropy_cap, c.trajopt.penalty};
  const DeformationSearch search{c.trajopt.lo, c.trajopt.hi, c.trajopt.grid, c.trajopt.tolerance};
  DeformationSetup setup;
  require(c.trajectory.tau > 0, ErrorKind::ConfigError, "trajopt needs a positive trajectory.tau");
  setup.schedule = {c.trajectory.tau, c.trajectory.arc};
  setup.steering_intervals = c.intervals;
  setup.evolution = evolution_options(c);
  const auto rep = optimize_deformation(c.trajopt.e1, obj, search, setup, c.jobs);
  Meta m{{"config", c.file},
         {"objective", c.trajopt.objective},
         {"schedule", "tau=" + fmt_number(c.trajectory.tau) + " arc=" + fmt_number(c.trajectory.arc)}};
  std::ostringstream os;
  write_trajopt(os, rep, m);
  emit(c, os.str());
  return 0;
}

int cmd_tdvp(const Experiment& e) {
  require(e.flow.has_value(), ErrorKind::ConfigError, "tdvp needs trajectory.family: tdvp");
  Meta m = e.meta();
  m.push_back({"flow_dt", fmt_number(e.cfg.trajectory.flow_dt)});
  m.push_back({"period", fmt_number(e.ret.t)});
  m.push_back({"return_distance", fmt_number(e.ret.distance)});
  std::ostringstream os;
  write_trajectory(os, *e.flow, m);
  emit(e.cfg, os.str());
  return 0;
}

std::pair<double, double> lowest_two(const OperatorDensity& h, const ChainBasis& basis) {
  const ComplexMatrix dense(realize_sparse(h, basis));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(dense, Eigen::EigenvaluesOnly);
  return {es.eigenvalues()[0], es.eigenvalues()[1] - es.eigenvalues()[0]};
}

int cmd_parent_check(const Experiment& e) {
  const auto& c = e.cfg;
  std::ostringstream os;
  Meta m{{"config", c.file}, {"ring_length", std::to_string(c.parent_check.length)}};
  if (c.model == Model::Pxp) {
    m.push_back({"seed", std::to_string(c.parent_check.seed)});
    write_header(os, "parent-check", m, {"theta1", "theta2", "variance_per_site", "E0", "gap"});
    const auto basis = make_chain_basis(c.parent_check.length, Boundary::Periodic, true);
    std::mt19937 rng(c.parent_check.seed);
    std::uniform_real_distribution<double> u1(-M_PI / 2 + 0.05, -0.05), u2(M_PI / 2 + 0.05, M_PI - 0.05);
    for (int k = 0; k < c.parent_check.points; ++k) {
      const double t1 = u1(rng), t2 = u2(rng);
      const auto h = pxp_parent(t1, t2).density;
      const auto [e0, gap] = lowest_two(h, basis);
      write_row(os, {t1, t2, parent_variance(e.manifold->mps((Params(2) << t1, t2).finished()), h), e0, gap});
    }
  } else {
    const auto psi = e.manifold->mps(seed_of(c));
    const auto presets = c.lambdas.empty() ? std::vector<std::vector<double>>{{1, 2, 3, 4}, {1, 1, 1, 16}}
                                           : std::vector<std::vector<double>>{c.lambdas};
    std::string names;
    for (std::size_t p = 0; p < presets.size(); ++p) {
      names += p ? "; " : "";
      for (std::size_t i = 0; i < presets[p].size(); ++i) names += (i ? "," : "") + fmt_number(presets[p][i]);
    }
    m.push_back({"lambda_presets", names});
    write_header(os, "parent-check", m, {"preset", "variance_per_site", "E0", "gap"});
    const auto basis = make_chain_basis(c.parent_check.length, Boundary::Periodic, false);
    for (std::size_t p = 0; p < presets.size(); ++p) {
      const auto h = general_parent(psi, 3, presets[p]).density;
      const auto [e0, gap] = lowest_two(h, basis);
      write_row(os, {static_cast<double>(p), parent_variance(psi, h), e0, gap});
    }
  }
  emit(c, os.str());
  return 0;
}

int run(const std::string& cmd, const Overrides& ov) {
  ExperimentConfig cfg = parse_config(load_yaml(ov.config), ov.config);
  if (!ov.out.empty()) cfg.output = ov.out;
  if (ov.jobs > 0) cfg.jobs = ov.jobs;
  if (ov.chi > 0) cfg.evolution.chi_max = ov.chi;
  if (ov.dt > 0) cfg.evolution.dt = ov.dt;
  if (cmd == "tdvp" && cfg.trajectory.family != Family::Tdvp)
    fail(ErrorKind::ConfigError, ov.config + ": field `trajectory.family`: the tdvp command needs 'tdvp'");
  if ((cmd == "landscape" || cmd == "trajopt") && cfg.model != Model::Pxp)
    fail(ErrorKind::ConfigError, ov.config + ": field `model`: " + cmd + " is defined for pxp only");
  if (cfg.model == Model::Tlfim && !cfg.lambdas.empty() && cfg.lambdas.size() != 4)
    fail(ErrorKind::ConfigError, ov.config + ": field `parent.lambdas`: the TLFIM parent has 4 weights");

  const Experiment e = build(cfg, !ov.dry_run);
  if (ov.dry_run) {
    if (!cfg.evolution.schedule.empty() && cmd == "evolve") read_table_file(cfg.evolution.schedule, "schedule");
    std::cerr << "config ok: " << ov.config << "\n";
    return 0;
  }
  if (cmd == "steer") return cmd_steer(e);
  if (cmd == "evolve") return cmd_evolve(e);
  if (cmd == "landscape") return cmd_landscape(e);
  if (cmd == "trajopt") return cmd_trajopt(e);
  if (cmd == "tdvp") return cmd_tdvp(e);
  return cmd_parent_check(e);
}

}  // namespace
}  // namespace mpsteer::cli

int main(int argc, char** argv) {
  using namespace mpsteer::cli;
  CLI::App app{"Steer uniform matrix product states along prescribed trajectories"};
  app.require_subcommand(1);
  Overrides ov;
  for (const char* name : {"steer", "evolve", "landscape", "trajopt", "tdvp", "parent-check"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config,-c", ov.config, "experiment config (YAML)")->required();
    sub->add_option("--out,-o", ov.out, "output file ('-' for stdout); overrides `output`");
    sub->add_option("--jobs,-j", ov.jobs, "cap on data-parallel workers")->check(CLI::PositiveNumber);
    sub->add_option("--chi", ov.chi, "override evolution.chi_max")->check(CLI::PositiveNumber);
    sub->add_option("--dt", ov.dt, "override evolution.dt")->check(CLI::PositiveNumber);
    sub->add_flag("--dry-run", ov.dry_run, "validate the config and exit");
  }
  app.get_subcommand("steer")->description("leakage-optimal or counterdiabatic control schedule");
  app.get_subcommand("evolve")->description("iTEBD fidelity and entanglement along the trajectory");
  app.get_subcommand("landscape")->description("rescaled-leakage extremes over the pxp parameter box");
  app.get_subcommand("trajopt")->description("search the e2 deformation of the pxp circle");
  app.get_subcommand("tdvp")->description("TDVP orbit from a seed point");
  app.get_subcommand("parent-check")->description("parent Hamiltonian variance and finite-ring gap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run(app.get_subcommands().front()->get_name(), ov);
  } catch (const mpsteer::Error& e) {
    std::cerr << "mpsteer: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "mpsteer: " << e.what() << "\n";
    return 3;
  }
}
