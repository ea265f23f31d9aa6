#pragma once

// Experiment configuration: YAML parsed into plain structs, with every problem reported as
// "file:line:column: field `a.b`: message".

#include <yaml-cpp/yaml.h>

#include <set>

#include "mpsteer/errors.hpp"
#include "mpsteer/manifolds.hpp"

namespace mpsteer::cli {

class Field {
 public:
  Field(YAML::Node node, std::string path, std::string file)
      : node_(std::move(node)), path_(std::move(path)), file_(std::move(file)) {}

  [[noreturn]] void error(const std::string& msg) const {
    std::string where = file_;
    if (node_.IsDefined() && node_.Mark().line >= 0)
      where += ":" + std::to_string(node_.Mark().line + 1) + ":" + std::to_string(node_.Mark().column + 1);
    fail(ErrorKind::ConfigError, where + ": field `" + path_ + "`: " + msg);
  }

  bool present() const { return !absent_ && node_.IsDefined() && !node_.IsNull(); }
  const std::string& path() const { return path_; }

  Field operator[](const std::string& key) const {
    if (!present()) return Field(node_, join(key), file_).missing();
    if (!node_.IsMap()) error("expected a mapping");
    const YAML::Node child = node_[key];
    if (!child.IsDefined()) return Field(node_, join(key), file_).missing();
    return Field(child, join(key), file_);
  }

  // Every key of this mapping must be one of `keys`.
  void only(std::initializer_list<const char*> keys) const {
    if (!present()) return;
    if (!node_.IsMap()) error("expected a mapping");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!ok.count(k)) Field(kv.first, join(k), file_).error("unknown key");
    }
  }

  double number(double fallback) const { return present() ? number() : fallback; }
  double number() const {
    need();
    try {
      return node_.as<double>();
    } catch (const YAML::Exception&) {
      error("expected a number");
    }
  }

  int integer(int fallback) const { return present() ? integer() : fallback; }
  int integer() const {
    need();
    try {
      return node_.as<int>();
    } catch (const YAML::Exception&) {
      error("expected an integer");
    }
  }

  bool flag(bool fallback) const {
    if (!present()) return fallback;
    try {
      return node_.as<bool>();
    } catch (const YAML::Exception&) {
      error("expected true or false");
    }
  }

  std::string text(const std::string& fallback) const { return present() ? text() : fallback; }
  std::string text() const {
    need();
    if (!node_.IsScalar()) error("expected a string");
    return node_.as<std::string>();
  }

  std::vector<double> numbers() const {
    need();
    if (!node_.IsSequence()) error("expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node_.size(); ++i)
      out.push_back(Field(node_[i], path_ + "[" + std::to_string(i) + "]", file_).number());
    return out;
  }
  std::vector<double> numbers(std::vector<double> fallback) const { return present() ? numbers() : fallback; }

  template <class T>
  T choice(const std::vector<std::pair<std::string, T>>& options, T fallback) const {
    if (!present()) return fallback;
    const std::string s = text();
    for (const auto& [name, v] : options)
      if (name == s) return v;
    std::string names;
    for (const auto& o : options) names += (names.empty() ? "" : ", ") + o.first;
    error("unknown value '" + s + "' (expected one of: " + names + ")");
  }

  void positive(double v) const {
    if (!(v > 0)) error("must be positive");
  }

 private:
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  Field missing() const {
    Field f = *this;
    f.absent_ = true;
    return f;
  }
  void need() const {
    if (!present()) error("required field is missing");
  }

  YAML::Node node_;
  std::string path_, file_;
  bool absent_ = false;  // missing child; node_ is the parent, kept for its position
};

enum class Model { Pxp, Tlfim };
enum class Family { Circle, Deformed, Tdvp, Samples };
enum class ProtocolKind { Steered, Static };

struct TrajectoryConfig {
  Family family = Family::Circle;
  double e1 = 0.0, e2 = 0.0, tau = 1.0, arc = 1.0;
  std::vector<double> seed;  // tdvp start; defaults to the TLFIM orbit seed
  double flow_dt = 0.005, flow_t_max = 2.3, return_after = 1.0;
  double end = -1.0;         // fixed end time; negative means the closest return
  std::string samples;
};

struct ExperimentConfig {
  std::string file;
  Model model = Model::Pxp;
  TrajectoryConfig trajectory;
  std::string method = "leakage";
  bool with_zy = false;
  std::vector<double> couplings;  // pxp: (c1, c2); tlfim: (J, h_z, h_x)
  std::vector<double> lambdas;
  int intervals = 200;
  struct {
    int chi_max = 64;
    double dt = 1e-3;
    int record_every = 10;
    ProtocolKind protocol = ProtocolKind::Steered;
    std::string schedule;
    std::vector<double> dt_sweep;
  } evolution;
  struct {
    int resolution = 64, angles = 64;
    std::vector<double> box{-M_PI / 2, 0.0, M_PI / 2, M_PI};
  } landscape;
  struct {
    double e1 = 0.0;
    std::string objective = "final-fidelity";
    double lo = -0.12, hi = 0.02, tolerance = 2e-3;
    int grid = 8;
    double entropy_cap = 0.0, penalty = 1.0;
  } trajopt;
  struct {
    int points = 100, length = 10;
    unsigned seed = 1;
  } parent_check;
  std::string output;
  int jobs = 1;
};

inline YAML::Node load_yaml(const std::string& path) {
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    fail(ErrorKind::ConfigError, path + ": cannot open config file");
  } catch (const YAML::ParserException& e) {
    fail(ErrorKind::ConfigError, path + ":" + std::to_string(e.mark.line + 1) + ":" +
                                     std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

inline ExperimentConfig parse_config(const YAML::Node& root, const std::string& file) {
  ExperimentConfig c;
  c.file = file;
  const Field top(root, "", file);
  if (top.present() && !root.IsMap()) top.error("top level must be a mapping");
  top.only({"model", "trajectory", "method", "controls", "hamiltonian", "parent", "steering", "evolution",
            "landscape", "trajopt", "parent_check", "output", "jobs"});

  c.model = top["model"].choice<Model>({{"pxp", Model::Pxp}, {"tlfim", Model::Tlfim}}, Model::Pxp);

  const Field tr = top["trajectory"];
  tr.only({"family", "e1", "e2", "tau", "arc", "seed", "dt", "t_max", "return_after", "end", "file"});
  auto& t = c.trajectory;
  t.family = tr["family"].choice<Family>(
      {{"circle", Family::Circle}, {"deformed", Family::Deformed}, {"tdvp", Family::Tdvp}, {"samples", Family::Samples}},
      c.model == Model::Pxp ? Family::Circle : Family::Tdvp);
  t.e1 = tr["e1"].number(0.0);
  t.e2 = tr["e2"].number(0.0);
  t.tau = tr["tau"].number(1.0);
  if (t.tau < 0) tr["tau"].error("must not be negative");
  t.arc = tr["arc"].number(1.0);
  tr["arc"].positive(t.arc);
  if (tr["seed"].present()) t.seed = tr["seed"].numbers();
  t.flow_dt = tr["dt"].number(0.005);
  tr["dt"].positive(t.flow_dt);
  t.flow_t_max = tr["t_max"].number(2.3);
  tr["t_max"].positive(t.flow_t_max);
  t.return_after = tr["return_after"].number(1.0);
  t.end = tr["end"].number(-1.0);
  t.samples = tr["file"].text("");
  if (t.family == Family::Samples && t.samples.empty()) tr["file"].error("required for family 'samples'");
  if ((t.family == Family::Circle || t.family == Family::Deformed) && c.model != Model::Pxp)
    tr["family"].error("circle and deformed trajectories live on the pxp manifold");
  if (t.family == Family::Circle && (t.e1 != 0.0 || t.e2 != 0.0)) tr["family"].error("circle takes no e1/e2; use 'deformed'");
  const int dim = c.model == Model::Pxp ? 2 : 4;
  if (!t.seed.empty() && static_cast<int>(t.seed.size()) != dim)
    tr["seed"].error("expected " + std::to_string(dim) + " parameters");

  c.method = top["method"].text("leakage");
  if (c.method != "leakage" && c.method != "rescaled" && c.method != "trace-cd" && c.method != "gs-cd")
    top["method"].error("unknown method '" + c.method + "' (expected leakage, rescaled, trace-cd or gs-cd)");

  const Field ctl = top["controls"];
  ctl.only({"with_zy"});
  c.with_zy = ctl["with_zy"].flag(false);
  if (c.with_zy && c.model != Model::Tlfim) ctl["with_zy"].error("only the tlfim model has a ZY control");

  const Field ham = top["hamiltonian"];
  if (c.model == Model::Pxp) {
    ham.only({"c1", "c2"});
    c.couplings = {ham["c1"].number(1.0), ham["c2"].number(1.0)};
  } else {
    ham.only({"J", "hz", "hx"});
    c.couplings = {ham["J"].number(1.0), ham["hz"].number(0.4), ham["hx"].number(1.0)};
  }

  const Field par = top["parent"];
  par.only({"lambdas"});
  c.lambdas = par["lambdas"].numbers({});
  for (double l : c.lambdas)
    if (!(l > 0)) par["lambdas"].error("weights must be positive");

  const Field st = top["steering"];
  st.only({"intervals"});
  c.intervals = st["intervals"].integer(200);
  if (c.intervals < 1) st["intervals"].error("must be at least 1");

  const Field ev = top["evolution"];
  ev.only({"chi_max", "dt", "record_every", "protocol", "schedule", "dt_sweep"});
  c.evolution.chi_max = ev["chi_max"].integer(64);
  if (c.evolution.chi_max < 1) ev["chi_max"].error("must be at least 1");
  c.evolution.dt = ev["dt"].number(1e-3);
  ev["dt"].positive(c.evolution.dt);
  c.evolution.record_every = ev["record_every"].integer(10);
  if (c.evolution.record_every < 1) ev["record_every"].error("must be at least 1");
  c.evolution.protocol = ev["protocol"].choice<ProtocolKind>(
      {{"steered", ProtocolKind::Steered}, {"static", ProtocolKind::Static}}, ProtocolKind::Steered);
  c.evolution.schedule = ev["schedule"].text("");
  c.evolution.dt_sweep = ev["dt_sweep"].numbers({});
  for (double d : c.evolution.dt_sweep) ev["dt_sweep"].positive(d);

  const Field ls = top["landscape"];
  ls.only({"resolution", "angles", "box"});
  c.landscape.resolution = ls["resolution"].integer(64);
  if (c.landscape.resolution < 2) ls["resolution"].error("must be at least 2");
  c.landscape.angles = ls["angles"].integer(64);
  if (c.landscape.angles < 2) ls["angles"].error("must be at least 2");
  c.landscape.box = ls["box"].numbers(c.landscape.box);
  if (c.landscape.box.size() != 4) ls["box"].error("expected [theta1_lo, theta1_hi, theta2_lo, theta2_hi]");

  const Field to = top["trajopt"];
  to.only({"e1", "objective", "lo", "hi", "grid", "tolerance", "entropy_cap", "penalty"});
  c.trajopt.e1 = to["e1"].number(0.0);
  c.trajopt.objective = to["objective"].text("final-fidelity");
  if (c.trajopt.objective != "final-fidelity" && c.trajopt.objective != "integrated-leakage" &&
      c.trajopt.objective != "midpoint-entanglement-constrained")
    to["objective"].error("unknown objective '" + c.trajopt.objective + "'");
  c.trajopt.lo = to["lo"].number(-0.12);
  c.trajopt.hi = to["hi"].number(0.02);
  if (!(c.trajopt.hi > c.trajopt.lo)) to["hi"].error("must exceed lo");
  c.trajopt.grid = to["grid"].integer(8);
  if (c.trajopt.grid < 3) to["grid"].error("must be at least 3");
  c.trajopt.tolerance = to["tolerance"].number(2e-3);
  to["tolerance"].positive(c.trajopt.tolerance);
  c.trajopt.entropy_cap = to["entropy_cap"].number(0.0);
  c.trajopt.penalty = to["penalty"].number(1.0);

  const Field pc = top["parent_check"];
  pc.only({"points", "length", "seed"});
  c.parent_check.points = pc["points"].integer(100);
  if (c.parent_check.points < 0) pc["points"].error("must not be negative");
  c.parent_check.length = pc["length"].integer(10);
  if (c.parent_check.length < 4 || c.parent_check.length > 16) pc["length"].error("must be in [4, 16]");
  const int seed = pc["seed"].integer(1);
  if (seed < 0) pc["seed"].error("must not be negative");
  c.parent_check.seed = static_cast<unsigned>(seed);

  c.output = top["output"].text("");
  c.jobs = top["jobs"].integer(1);
  if (c.jobs < 1) top["jobs"].error("must be at least 1");
  return c;
}

}  // namespace mpsteer::cli
