#include "evoel/cli_io.hpp"

#include "evoel/error.hpp"
#include "evoel/reduction.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace evoel::cli {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::set<std::string>& keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    (void)v;
    if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

double number(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

std::string text(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

bool flag(const json& obj, const std::string& key, const std::string& where) {
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
  return v.get<bool>();
}

Matrix matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || !v[0].is_array()) throw ConfigError(where + " must be an array of rows");
  const Index rows = static_cast<Index>(v.size());
  const Index cols = static_cast<Index>(v[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ConfigError(where + " has ragged rows");
    for (Index c = 0; c < cols; ++c) {
      const json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw ConfigError(where + " must contain numbers");
      m(r, c) = x.get<double>();
    }
  }
  return m;
}

json classification_json(const Classification& c) {
  return {{"symmetry", c.symmetry()}, {"definiteness", std::string(to_string(c.definiteness))}};
}

double relative_deviation(const BlockOperator& got, const BlockOperator& want) {
  const double dev = max_deviation(got, want);
  const double scale = want.max_abs();
  return scale > 0.0 ? dev / scale : dev;
}

double exact_skew_defect(const BlockOperator& a) {
  const SparseMatrix s = a.to_sparse();
  const SparseMatrix sum = s + SparseMatrix(s.transpose());
  double m = 0.0;
  for (Index k = 0; k < sum.nonZeros(); ++k) m = std::max(m, std::abs(sum.valuePtr()[k]));
  return m;
}

void write_report(const OutputConfig& o, const std::string& report) {
  if (o.report_json.empty()) return;
  std::ofstream out(o.report_json);
  if (!out) throw ConfigError("cannot write " + o.report_json);
  out << report << '\n';
}

const std::set<std::string> kForcingKinds = {"gaussian_pulse", "constant", "zero"};

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    allow_keys(j, {"model", "time", "forcing", "outputs", "rho", "force", "edge"}, "config");
    if (!j.contains("model")) throw ConfigError("missing required section 'model'");
    const json& m = j["model"];
    allow_keys(m, {"name", "params", "overrides", "grid"}, "model");
    if (!m.contains("name")) throw ConfigError("missing required field model.name");
    cfg.model.name = text(m, "name", "model");
    try {
      model_info(cfg.model.name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (m.contains("params")) {
      if (!m["params"].is_object()) throw ConfigError("model.params must be an object");
      for (const auto& [k, v] : m["params"].items()) {
        if (!v.is_number()) throw ConfigError("model.params." + k + " must be a number");
        cfg.model.params[k] = v.get<double>();
      }
    }
    if (m.contains("overrides")) {
      if (!m["overrides"].is_object()) throw ConfigError("model.overrides must be an object");
      for (const auto& [k, v] : m["overrides"].items()) cfg.model.overrides[k] = matrix(v, "model.overrides." + k);
    }
    if (m.contains("grid")) {
      const json& g = m["grid"];
      allow_keys(g, {"n", "h"}, "model.grid");
      Index n = cfg.model.grid.n();
      if (g.contains("n")) {
        if (!g["n"].is_number_integer()) throw ConfigError("model.grid.n must be an integer");
        n = g["n"].get<Index>();
      }
      const double h = g.contains("h") ? number(g, "h", "model.grid") : 1.0 / static_cast<double>(n + 1);
      try {
        cfg.model.grid = Grid(n, h);
      } catch (const ShapeError& e) {
        throw ConfigError(e.what());
      }
    }

    if (j.contains("time")) {
      const json& t = j["time"];
      allow_keys(t, {"dt", "T", "scheme"}, "time");
      if (!t.contains("dt") || !t.contains("T")) throw ConfigError("time needs dt and T");
      cfg.has_time = true;
      cfg.dt = number(t, "dt", "time");
      cfg.horizon = number(t, "T", "time");
      if (t.contains("scheme")) {
        try {
          cfg.scheme = scheme_from_string(text(t, "scheme", "time"));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
      if (!(cfg.dt > 0.0)) throw ConfigError("time.dt must be positive");
      if (!(cfg.horizon > cfg.dt)) throw ConfigError("time.T must exceed time.dt");
    }

    if (j.contains("forcing")) {
      const json& f = j["forcing"];
      allow_keys(f, {"kind", "onset", "center", "width", "amplitude", "target_block", "end"}, "forcing");
      if (!f.contains("kind")) throw ConfigError("missing required field forcing.kind");
      cfg.forcing.kind = text(f, "kind", "forcing");
      if (!kForcingKinds.count(cfg.forcing.kind)) throw ConfigError("unknown forcing kind '" + cfg.forcing.kind + "'");
      if (f.contains("onset")) cfg.forcing.onset = number(f, "onset", "forcing");
      if (f.contains("center")) cfg.forcing.center = number(f, "center", "forcing");
      if (f.contains("width")) cfg.forcing.width = number(f, "width", "forcing");
      if (f.contains("amplitude")) cfg.forcing.amplitude = number(f, "amplitude", "forcing");
      if (f.contains("end")) cfg.forcing.end = number(f, "end", "forcing");
      if (f.contains("target_block")) cfg.forcing.target_block = text(f, "target_block", "forcing");
      if (!(cfg.forcing.width > 0.0)) throw ConfigError("forcing.width must be positive");
      if (cfg.forcing.onset < 0.0 || (cfg.has_time && cfg.forcing.onset >= cfg.horizon))
        throw ConfigError("forcing.onset must lie in [0, T)");
    }

    if (j.contains("outputs")) {
      const json& o = j["outputs"];
      allow_keys(o, {"energy_csv", "snapshot_every", "snapshot_dir", "report_json"}, "outputs");
      if (o.contains("energy_csv")) cfg.outputs.energy_csv = text(o, "energy_csv", "outputs");
      if (o.contains("snapshot_dir")) cfg.outputs.snapshot_dir = text(o, "snapshot_dir", "outputs");
      if (o.contains("report_json")) cfg.outputs.report_json = text(o, "report_json", "outputs");
      if (o.contains("snapshot_every")) {
        if (!o["snapshot_every"].is_number_integer() || o["snapshot_every"].get<Index>() < 0)
          throw ConfigError("outputs.snapshot_every must be a non-negative integer");
        cfg.outputs.snapshot_every = o["snapshot_every"].get<Index>();
      }
      if (cfg.outputs.snapshot_every > 0 && cfg.outputs.snapshot_dir.empty())
        throw ConfigError("outputs.snapshot_every needs outputs.snapshot_dir");
    }

    if (j.contains("rho")) {
      cfg.rho = number(j, "rho", "config");
      if (!(cfg.rho > 0.0)) throw ConfigError("rho must be positive");
    }
    if (j.contains("force")) cfg.force = flag(j, "force", "config");
    if (j.contains("edge")) {
      const json& e = j["edge"];
      allow_keys(e, {"to", "dynamics"}, "edge");
      if (!e.contains("to")) throw ConfigError("missing required field edge.to");
      EdgeConfig ec;
      ec.to = text(e, "to", "edge");
      if (e.contains("dynamics")) ec.dynamics = flag(e, "dynamics", "edge");
      cfg.edge = ec;
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Forcing make_forcing(const ForcingConfig& f, const StateLayout& layout, const Grid& grid) {
  Forcing out;
  if (f.kind == "zero") return out;
  std::string target = f.target_block;
  if (target.empty()) {
    for (const auto& b : layout.blocks())
      if (b.role == Role::kinetic) {
        target = b.label;
        break;
      }
  }
  std::size_t bi;
  try {
    bi = layout.index(target);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("forcing.target_block: ") + e.what());
  }
  Index off = 0;
  for (std::size_t i = 0; i < bi; ++i) off += grid.nodes() * layout.blocks()[i].node_dim();
  const Index d = layout.blocks()[bi].node_dim();
  Vector s = Vector::Zero(grid.nodes() * layout.node_dim());
  const double k = std::numbers::pi / grid.extent();
  for (Index p = 0; p < grid.nodes(); ++p) {
    const auto x = grid.position(p);
    const double v = std::sin(k * x[0]) * std::sin(k * x[1]) * std::sin(k * x[2]);
    s.segment(off + p * d, d).setConstant(v);
  }
  if (f.kind == "gaussian_pulse") {
    out.add(GaussianPulse{f.amplitude, f.center, f.width, f.onset, f.end}, std::move(s));
  } else {
    const double a = f.amplitude, t0 = f.onset, t1 = f.end;
    out.add([a, t0, t1](double t) { return t >= t0 && t < t1 ? a : 0.0; }, std::move(s));
  }
  return out;
}

void write_energy_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "t,E_total,E_M0,E_M2,work_integral,residual\n";
  out << std::scientific << std::setprecision(16);
  double work = 0.0;
  const double e0 = traj.energy(0);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    work += traj.work[k];
    const double e = traj.energy(static_cast<Index>(k));
    out << traj.times[k] << ',' << e << ',' << traj.energy_m0[k] << ',' << traj.energy_m2[k] << ',' << work << ','
        << std::abs(e - e0 - work) << '\n';
  }
}

CommandResult cmd_validate(const RunConfig& cfg) {
  json r;
  r["model"] = cfg.model.name;
  std::vector<std::string> violations;
  try {
    violations = check_parameters(cfg.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  r["violations"] = violations;
  bool ok = violations.empty();
  try {
    const Model m = build(cfg.model, false);
    const Validity& v = m.law.validity();
    r["law"] = {{"valid", v.valid}, {"reasons", v.reasons}, {"warnings", v.warnings}};
    r["classification"] = {{"M0", classification_json(classify(m.law.m0()))},
                           {"M1", classification_json(classify(m.law.m1()))},
                           {"M2", classification_json(classify(m.law.m2()))},
                           {"A", classification_json(classify(m.problem.a))}};
    r["A_skew_defect"] = exact_skew_defect(m.problem.a);
    ok = ok && v.valid && exact_skew_defect(m.problem.a) == 0.0;
  } catch (const SingularError& e) {
    r["law"] = {{"valid", false}, {"reasons", {e.what()}}, {"warnings", json::array()}};
    ok = false;
  }
  r["valid"] = ok;
  const std::string report = r.dump(2);
  write_report(cfg.outputs, report);
  return {ok ? kOk : kValidationFailed, report};
}

CommandResult cmd_run(const RunConfig& cfg) {
  if (!cfg.has_time) throw ConfigError("run needs a 'time' section");
  json r;
  r["model"] = cfg.model.name;
  std::vector<std::string> violations;
  try {
    violations = check_parameters(cfg.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!violations.empty() && !cfg.force) {
    r["violations"] = violations;
    r["error"] = "inadmissible parameters (use force to run anyway)";
    const std::string report = r.dump(2);
    write_report(cfg.outputs, report);
    return {kValidationFailed, report};
  }

  Model m = build(cfg.model, false);
  EvoProblem& p = m.problem;
  p.horizon = cfg.horizon;
  p.onset = cfg.forcing.onset;
  p.allow_indefinite_m2 = cfg.force;
  p.forcing = make_forcing(cfg.forcing, m.law.layout(), cfg.model.grid);

  RunOptions opts;
  opts.store_every = 0;
  if (cfg.outputs.snapshot_every > 0) {
    std::filesystem::create_directories(cfg.outputs.snapshot_dir);
    const auto every = cfg.outputs.snapshot_every;
    opts.observer = [&, every](Index k, double t, const Vector& u, const Vector&) {
      if (k % every != 0) return;
      std::ostringstream name;
      name << cfg.outputs.snapshot_dir << "/snapshot_" << std::setw(6) << std::setfill('0') << k;
      write_snapshot_csv(name.str() + ".csv", m.law.layout(), cfg.model.grid, u);
      std::ofstream side(name.str() + ".json");
      side << snapshot_sidecar(m.law.layout(), cfg.model.grid, t) << '\n';
    };
  }

  Trajectory tr;
  try {
    tr = run(p, cfg.dt, cfg.scheme, opts);
  } catch (const SolverError& e) {
    r["error"] = e.what();
    r["solver_residual"] = e.residual();
    const std::string report = r.dump(2);
    write_report(cfg.outputs, report);
    return {kSolverError, report};
  } catch (const PreconditionError& e) {
    r["error"] = e.what();
    const std::string report = r.dump(2);
    write_report(cfg.outputs, report);
    return {kValidationFailed, report};
  }

  if (!cfg.outputs.energy_csv.empty()) write_energy_csv(cfg.outputs.energy_csv, tr);

  double max_res = 0.0;
  for (double x : tr.solve_residual) max_res = std::max(max_res, x);
  const Index first = tr.first_nonzero_step;
  const double first_t = first >= 0 ? tr.times[static_cast<std::size_t>(first)] : -1.0;
  r["scheme"] = std::string(to_string(cfg.scheme));
  r["dt"] = cfg.dt;
  r["steps"] = tr.steps;
  r["final_energy"] = tr.energy(tr.steps);
  r["final_balance_residual"] = energy_balance_residual(tr, 0, tr.steps);
  r["max_solve_residual"] = max_res;
  r["causality"] = {{"onset", cfg.forcing.onset},
                    {"first_nonzero_step", first},
                    {"first_nonzero_time", first >= 0 ? json(first_t) : json(nullptr)},
                    {"causal", first < 0 || first_t >= cfg.forcing.onset}};
  r["rho"] = cfg.rho;
  r["weighted_state_norm"] = weighted_norm(tr.times, tr.state_norm, cfg.rho);
  if (!violations.empty()) r["violations"] = violations;
  const std::string report = r.dump(2);
  write_report(cfg.outputs, report);
  return {kOk, report};
}

CommandResult cmd_derive(const RunConfig& cfg) {
  if (!cfg.edge) throw ConfigError("derive needs an 'edge' section");
  const std::string& to = cfg.edge->to;
  ReductionMap map = [&] {
    try {
      return reduction_edge(cfg.model.name, to);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  json r;
  std::vector<std::string> violations;
  try {
    violations = check_parameters(cfg.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!violations.empty()) {
    r["violations"] = violations;
    const std::string report = r.dump(2);
    write_report(cfg.outputs, report);
    return {kValidationFailed, report};
  }

  const Model mother = build(cfg.model);
  const ModelSpec target = edge_target(cfg.model, to);
  const Model direct = build(target, false);
  const DescendantProblem d = conjugate_problem(mother.problem, map);
  const MaterialLaw node_child = conjugate_law(mother.law, map);

  std::vector<std::pair<std::string, double>> ids;
  bool ok = true;
  auto compare = [&](const std::string& name, const BlockOperator& got, const BlockOperator& want) {
    const BlockOperator g = drop_empty_spaces(got);
    if (g.row_spaces() != want.row_spaces() || g.col_spaces() != want.col_spaces()) {
      ids.emplace_back(name, std::numeric_limits<double>::infinity());
      ok = false;
      return;
    }
    const double dev = relative_deviation(g, want);
    ids.emplace_back(name, dev);
    ok = ok && dev <= 1e-12;
  };
  compare("node_M0", node_child.m0(), direct.law.m0());
  compare("node_M1", node_child.m1(), direct.law.m1());
  compare("node_M2", node_child.m2(), direct.law.m2());
  compare("grid_M0", d.child.m0, direct.problem.m0);
  compare("grid_M1", d.child.m1, direct.problem.m1);
  compare("grid_M2", d.child.m2, direct.problem.m2);
  compare("grid_A", d.child.a, direct.problem.a);
  {
    const BlockOperator sas = conjugate(mother.problem.a, d.s);
    const double dev = relative_deviation(d.child.a, sas);
    ids.emplace_back("A_S_vs_SAS", dev);
  }
  ids.emplace_back("child_A_skew_defect", exact_skew_defect(d.child.a));
  ok = ok && exact_skew_defect(d.child.a) == 0.0;

  std::optional<DynamicsReport> dyn;
  std::string dyn_error;
  if (cfg.edge->dynamics) {
    if (!cfg.has_time) throw ConfigError("edge.dynamics needs a 'time' section");
    DescendantProblem dd = d;
    dd.mother.horizon = dd.child.horizon = cfg.horizon;
    const Forcing f = make_forcing(cfg.forcing, map.target(), cfg.model.grid);
    try {
      dyn = verify_descendant_dynamics(dd, f, cfg.dt, cfg.scheme);
      ok = ok && dyn->discrepancy <= 1e-10;
    } catch (const PreconditionError& e) {
      dyn_error = e.what();
      ok = false;
    } catch (const SolverError& e) {
      json err;
      err["error"] = e.what();
      err["solver_residual"] = e.residual();
      const std::string report = err.dump(2);
      write_report(cfg.outputs, report);
      return {kSolverError, report};
    }
  }

  json rep = json::parse(reduction_report_json(d, ids, dyn));
  rep["from"] = cfg.model.name;
  rep["to"] = to;
  if (!dyn_error.empty()) rep["dynamics_error"] = dyn_error;
  rep["ok"] = ok;
  const std::string report = rep.dump(2);
  write_report(cfg.outputs, report);
  return {ok ? kOk : kValidationFailed, report};
}

std::string cmd_zoo_list() { return zoo_json(); }

}  // namespace evoel::cli
