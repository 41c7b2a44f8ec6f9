#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "idapbc/benchmarks.hpp"
#include "idapbc/condition.hpp"
#include "idapbc/control.hpp"
#include "idapbc/matching.hpp"
#include "idapbc/simulator.hpp"

namespace idapbc::cli {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw Error(ErrorCode::ConfigParse, what + ": '" + text + "' is not a number");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw Error(ErrorCode::ConfigParse, what + ": '" + text + "' is not a boolean");
}

std::pair<std::string, double> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || trim(text.substr(0, eq)).empty()) {
    throw Error(ErrorCode::ConfigParse, "expected name=value, got '" + text + "'");
  }
  const std::string name = trim(text.substr(0, eq));
  return {name, parse_number(text.substr(eq + 1), name)};
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(num(m(i, j)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

json to_json(const Params& p) {
  json o = json::object();
  for (const auto& [k, v] : p) o[k] = num(v);
  return o;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Where a report goes: --out, else IDAPBC_OUTPUT_DIR/<benchmark>_<command>.<ext>, else stdout.
void emit(const RunConfig& cfg, const std::string& ext, const std::string& content,
          std::ostream& out, std::ostream& err) {
  std::filesystem::path path;
  if (!cfg.out.empty()) {
    path = cfg.out;
  } else if (const char* dir = std::getenv("IDAPBC_OUTPUT_DIR"); dir && *dir) {
    path = std::filesystem::path(dir) /
           ((cfg.benchmark.empty() ? std::string("pendubot") : cfg.benchmark) + "_" +
            cfg.command + "." + ext);
  }
  if (path.empty()) {
    out << content;
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  file << content;
  err << "wrote " << path.string() << "\n";
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

Benchmark build(const RunConfig& cfg) {
  if (cfg.benchmark.empty()) throw Error(ErrorCode::ConfigParse, "no benchmark given");
  Benchmark b = make_benchmark(cfg.benchmark, cfg.params);
  if (cfg.gains) {
    const Vector k = Eigen::Map<const Vector>(cfg.gains->data(),
                                              static_cast<Eigen::Index>(cfg.gains->size()));
    if (k.size() != b.design.gains().size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  cfg.benchmark + " takes " + std::to_string(b.design.gains().size()) +
                      " gain(s), got " + std::to_string(k.size()));
    }
    b.design = b.design.with_gains(k);
  }
  if (cfg.kv) b.design = b.design.with_damping(*cfg.kv * Matrix::Identity(b.model.m, b.model.m));
  return b;
}

json condition_json(const ConditionReport& r) {
  json j;
  j["satisfied"] = r.satisfied;
  j["tol"] = num(r.tol);
  j["min_eigenvalue"] = num(r.min_eigenvalue());
  j["eigenvalues"] = to_json(r.total_eigenvalues);
  j["vdh_hessian"] = to_json(r.vdh_hessian);
  j["eta_hessian"] = to_json(r.eta_hessian);
  j["scenario"] = r.scenario ? json(std::string(to_string(*r.scenario))) : json(nullptr);
  j["rho"] = r.rho ? num(*r.rho) : json(nullptr);
  j["k_min"] = r.k_min ? num(*r.k_min) : json(nullptr);
  return j;
}

json printed_json(const Benchmark& b, const ConditionReport& r) {
  json j = json::object();
  if (b.printed_decomposition) {
    j["alpha"] = to_json(b.printed_decomposition->alpha);
    j["beta"] = to_json(b.printed_decomposition->beta);
    j["beta_max_abs_diff"] =
        num((b.printed_decomposition->beta - r.eta_hessian).cwiseAbs().maxCoeff());
  }
  if (b.printed_eta_hessian) {
    j["eta_hessian"] = to_json(*b.printed_eta_hessian);
    j["eta_hessian_max_abs_diff"] = num(
        (numerics::symmetrize(*b.printed_eta_hessian) - r.eta_hessian).cwiseAbs().maxCoeff());
  }
  return j;
}

json notes_json(const Benchmark& b) {
  json a = json::array();
  for (const auto& n : b.notes) a.push_back(n);
  return a;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  json j;
  j["command"] = "verify";
  ConditionReport report;
  if (cfg.numeric_case) {
    if (!cfg.gains || cfg.gains->size() != 1) {
      throw Error(ErrorCode::InvalidArgument, "--numeric-case needs a single gain via --k");
    }
    const auto parts = pendubot_numeric_case();
    report = check_condition_matrices(parts.alpha, parts.beta, cfg.gains->front(), cfg.tol);
    j["benchmark"] = "pendubot";
    j["numeric_case"] = true;
    j["gains"] = to_json(Vector(Vector::Constant(1, cfg.gains->front())));
    j["alpha"] = to_json(parts.alpha);
    j["beta"] = to_json(parts.beta);
  } else {
    const Benchmark b = build(cfg);
    report = check_condition(b.model, b.design, b.model.equilibrium, cfg.tol);
    j["benchmark"] = b.name;
    j["numeric_case"] = false;
    j["params"] = to_json(b.model.params);
    j["gains"] = to_json(b.design.gains());
    j["gated"] = b.gated;
    j["notes"] = notes_json(b);
    j["printed"] = printed_json(b, report);
  }
  j.update(condition_json(report));
  emit(cfg, "json", dump(j), out, err);
  return report.satisfied ? kExitOk : kExitConditionFailed;
}

int cmd_gains(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  json j;
  j["command"] = "gains";
  std::optional<TwoDofDecomposition> parts;
  if (cfg.numeric_case) {
    parts = pendubot_numeric_case();
    j["benchmark"] = "pendubot";
    j["numeric_case"] = true;
  } else {
    const Benchmark b = build(cfg);
    j["benchmark"] = b.name;
    j["numeric_case"] = false;
    j["params"] = to_json(b.model.params);
    if (b.model.n == 2 && b.model.m == 1 && b.design.basis().size() == 1) {
      parts = decompose_two_dof(b.model, b.design, b.model.equilibrium);
    } else {
      GainSearchOptions opts;
      opts.tol = cfg.tol;
      const auto res = feasible_gains_search(b.model, b.design, b.model.equilibrium, opts);
      j["method"] = "grid_bisection";
      j["feasible"] = res.feasible;
      j["gains"] = to_json(res.gains);
      j["min_eigenvalue"] = num(res.min_eigenvalue);
      j["certificate"] = res.certificate ? to_json(*res.certificate) : json(nullptr);
      j["message"] = res.message;
      emit(cfg, "json", dump(j), out, err);
      return res.feasible ? kExitOk : kExitInfeasible;
    }
  }
  j["method"] = "closed_form";
  j["alpha"] = to_json(parts->alpha);
  j["beta"] = to_json(parts->beta);
  const Scenario scenario = classify_scenario(parts->beta);
  j["scenario"] = std::string(to_string(scenario));
  j["rho"] = num(rho_of(parts->alpha, parts->beta));
  int code = kExitOk;
  try {
    const GainBound bound = gain_lower_bound(parts->alpha, parts->beta);
    j["feasible"] = true;
    j["k_min"] = num(bound.k_min);
    j["message"] = "feasible";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RhoNotPositive && e.code() != ErrorCode::NegativeDefiniteEta) throw;
    j["feasible"] = false;
    j["k_min"] = nullptr;
    j["message"] = e.what();
    code = kExitInfeasible;
  }
  emit(cfg, "json", dump(j), out, err);
  return code;
}

PhaseState initial_state(const RunConfig& cfg, const SystemModel& model) {
  PhaseState x{model.equilibrium, Vector::Zero(model.n)};
  if (!cfg.x0) {
    x.q(0) += 0.05;
    return x;
  }
  const auto& v = *cfg.x0;
  const auto n = static_cast<std::size_t>(model.n);
  if (v.size() != n && v.size() != 2 * n) {
    throw Error(ErrorCode::DimensionMismatch, "x0 needs " + std::to_string(n) + " or " +
                                                  std::to_string(2 * n) + " values, got " +
                                                  std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < n; ++i) x.q(static_cast<Eigen::Index>(i)) = v[i];
  if (v.size() == 2 * n) {
    for (std::size_t i = 0; i < n; ++i) x.p(static_cast<Eigen::Index>(i)) = v[n + i];
  }
  return x;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Benchmark b = build(cfg);
  const int n = b.model.n, m = b.model.m;
  SimOptions opts;
  opts.horizon = cfg.horizon;
  opts.sample_interval = cfg.dt;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  const Trajectory traj = simulate(b.model, b.design, initial_state(cfg, b.model), opts);

  std::ostringstream csv;
  csv << "t";
  for (int i = 1; i <= n; ++i) csv << ",q" << i;
  for (int i = 1; i <= n; ++i) csv << ",p" << i;
  for (int i = 1; i <= m; ++i) csv << ",u" << i;
  csv << ",H_d,V_lyap,V_dot\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    csv << fmt17(traj.times[k]);
    for (int i = 0; i < n; ++i) csv << ',' << fmt17(traj.states[k].q(i));
    for (int i = 0; i < n; ++i) csv << ',' << fmt17(traj.states[k].p(i));
    for (int i = 0; i < m; ++i) csv << ',' << fmt17(traj.inputs[k](i));
    csv << ',' << fmt17(traj.hd[k]) << ',' << fmt17(traj.lyap[k]) << ','
        << fmt17(traj.lyap_rate[k]) << '\n';
  }
  emit(cfg, "csv", csv.str(), out, err);

  for (const auto& w : traj.warnings) err << "warning: " << w << "\n";
  if (traj.status != SimStatus::Completed) {
    err << "warning: " << to_string(traj.status) << ": " << traj.message << "\n";
  }
  if (!cfg.summary.empty()) {
    const auto metrics = convergence_metrics(traj, b.model.equilibrium);
    json s;
    s["benchmark"] = b.name;
    s["status"] = std::string(to_string(traj.status));
    s["message"] = traj.message;
    s["warnings"] = traj.warnings;
    s["samples"] = traj.size();
    s["final_error"] = num(metrics.final_error);
    s["settling_time"] = num(metrics.settling_time);
    s["min_lyap"] = num(metrics.min_lyap);
    s["max_lyap"] = num(metrics.max_lyap);
    s["max_lyap_increase"] = num(metrics.max_lyap_increase);
    s["steps"] = traj.stats.steps;
    s["rejected"] = traj.stats.rejected;
    s["rtol"] = num(traj.rtol);
    s["atol"] = num(traj.atol);
    RunConfig to_summary = cfg;
    to_summary.out = cfg.summary;
    emit(to_summary, "json", dump(s), out, err);
  }
  return traj.status == SimStatus::IntegrationFailure ? kExitError : kExitOk;
}

int cmd_residuals(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Benchmark b = build(cfg);
  const int n = b.model.n;
  const auto states = sample_states(b.model, cfg.samples, cfg.seed);
  double homog = 0.0, potential = 0.0, kin_policy = 0.0, kin_zero = 0.0;
  std::vector<double> per_basis(b.design.basis().size(), 0.0);
  int j2_failures = 0;
  for (const auto& x : states) {
    homog = std::max(homog, homogeneous_residual(b.model, b.design, x.q).max_abs());
    potential = std::max(potential, potential_residual(b.model, b.design, x.q).max_abs());
    const auto br = basis_residuals(b.model, b.design, x.q);
    for (std::size_t i = 0; i < br.size(); ++i) per_basis[i] = std::max(per_basis[i], br[i].max_abs());
    kin_zero = std::max(kin_zero, kinetic_residual(b.model, b.design, x.q, x.p,
                                                   Matrix::Zero(n, n)).max_abs());
    try {
      kin_policy = std::max(kin_policy, kinetic_residual(b.model, b.design, x.q, x.p).max_abs());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSolution) throw;
      ++j2_failures;
    }
  }
  json j;
  j["command"] = "residuals";
  j["benchmark"] = b.name;
  j["params"] = to_json(b.model.params);
  j["samples"] = cfg.samples;
  j["seed"] = cfg.seed;
  j["gated"] = b.gated;
  j["notes"] = notes_json(b);
  j["threshold"] = matching::kResidualTol;
  j["homogeneous_max"] = num(homog);
  j["homogeneous_ok"] = homog < matching::kResidualTol;
  json basis = json::array();
  for (std::size_t i = 0; i < per_basis.size(); ++i) {
    basis.push_back({{"name", b.design.basis()[i].name}, {"max", num(per_basis[i])}});
  }
  j["basis"] = basis;
  j["potential_max"] = num(potential);
  j["kinetic_j2_policy"] = std::string(to_string(b.design.j2_policy().mode));
  j["kinetic_max"] = num(kin_policy);
  j["kinetic_j2_zero_max"] = num(kin_zero);
  j["kinetic_j2_failures"] = j2_failures;
  j["unmatched_force_at_equilibrium"] =
      to_json(unmatched_force(b.model, b.design, b.model.equilibrium));
  emit(cfg, "json", dump(j), out, err);
  return kExitOk;
}

int cmd_list(std::ostream& out) {
  for (const auto& spec : benchmark_registry()) {
    out << spec.name << "\t" << spec.description << "\n";
    for (const auto& [k, v] : spec.defaults) {
      out << "  " << k << " = " << (std::isnan(v) ? std::string("derived") : json(v).dump()) << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": missing '='");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::ConfigParse, "line " + std::to_string(lineno) + ": empty key");
    }
    entries[key] = trim(line.substr(eq + 1));
  }
  return entries;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(parse_number(item, "list entry"));
  if (out.empty()) throw Error(ErrorCode::ConfigParse, "empty list");
  return out;
}

void apply_config(const std::map<std::string, std::string>& entries, RunConfig& cfg) {
  static const std::string kParams = "benchmark.params.";
  for (const auto& [key, value] : entries) {
    if (key == "benchmark" || key == "benchmark.name") {
      cfg.benchmark = value;
    } else if (key.rfind(kParams, 0) == 0 && key.size() > kParams.size()) {
      cfg.params[key.substr(kParams.size())] = parse_number(value, key);
    } else if (key == "design.k" || key == "design.gains") {
      cfg.gains = parse_list(value);
    } else if (key == "design.kv") {
      cfg.kv = parse_number(value, key);
    } else if (key == "simulate.x0") {
      cfg.x0 = parse_list(value);
    } else if (key == "simulate.horizon") {
      cfg.horizon = parse_number(value, key);
    } else if (key == "simulate.dt") {
      cfg.dt = parse_number(value, key);
    } else if (key == "simulate.rtol") {
      cfg.rtol = parse_number(value, key);
    } else if (key == "simulate.atol") {
      cfg.atol = parse_number(value, key);
    } else if (key == "condition.tol") {
      cfg.tol = parse_number(value, key);
    } else if (key == "residuals.samples") {
      cfg.samples = static_cast<int>(parse_number(value, key));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_number(value, key));
    } else if (key == "gains.numeric_case") {
      cfg.numeric_case = parse_bool(value, key);
    } else if (key == "output.path") {
      cfg.out = value;
    } else if (key == "output.summary") {
      cfg.summary = value;
    } else {
      throw Error(ErrorCode::ConfigParse, "unknown config key '" + key + "'");
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"IDA-PBC stability checks, gain selection and closed-loop simulation", "idapbc"};
  app.require_subcommand(1);

  std::string config_path, benchmark, gains, kv, x0, horizon, dt, rtol, atol, tol, samples, seed;
  std::string out_path, summary;
  std::vector<std::string> params;
  bool numeric_case = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--benchmark,-b", benchmark, "cable_robot | acrobot | pendubot | cart_pole | vtol");
    sub->add_option("--config,-c", config_path, "key = value config file");
    sub->add_option("--param,-p", params, "parameter override name=value (repeatable)");
    sub->add_option("--out,-o", out_path, "output file");
    sub->add_option("--seed", seed, "sampling seed");
  };
  auto design = [&](CLI::App* sub) {
    sub->add_option("--k,--gains", gains, "gain(s), comma separated");
    sub->add_option("--kv", kv, "damping K_v = kv I");
  };

  CLI::App* verify = app.add_subcommand("verify", "check the stability condition at q_d");
  common(verify);
  design(verify);
  verify->add_option("--tol", tol, "eigenvalue threshold");
  verify->add_flag("--numeric-case", numeric_case, "use the injected Pendubot alpha/beta");

  CLI::App* gains_cmd = app.add_subcommand("gains", "gain bound or feasible gains");
  common(gains_cmd);
  design(gains_cmd);
  gains_cmd->add_option("--tol", tol, "eigenvalue threshold");
  gains_cmd->add_flag("--numeric-case", numeric_case, "use the injected Pendubot alpha/beta");

  CLI::App* sim = app.add_subcommand("simulate", "closed-loop simulation to CSV");
  common(sim);
  design(sim);
  sim->add_option("--x0", x0, "initial q (and p), comma separated");
  sim->add_option("--horizon", horizon, "final time");
  sim->add_option("--dt", dt, "sample interval");
  sim->add_option("--rtol", rtol, "relative tolerance");
  sim->add_option("--atol", atol, "absolute tolerance");
  sim->add_option("--summary", summary, "JSON summary file");

  CLI::App* res = app.add_subcommand("residuals", "matching-equation residuals on samples");
  common(res);
  design(res);
  res->add_option("--samples", samples, "number of workspace samples");

  app.add_subcommand("list", "list benchmarks and their parameters");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: CONFIG_PARSE: " << e.what() << "\n";
    return kExitError;
  }

  try {
    RunConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();
    if (cfg.command == "list") return cmd_list(out);

    if (!config_path.empty()) {
      std::ifstream file(config_path);
      if (!file) throw Error(ErrorCode::ConfigParse, "cannot read config " + config_path);
      std::stringstream text;
      text << file.rdbuf();
      apply_config(parse_config_text(text.str()), cfg);
    }
    if (!benchmark.empty()) cfg.benchmark = benchmark;
    for (const auto& p : params) {
      const auto [name, value] = parse_assignment(p);
      cfg.params[name] = value;
    }
    if (!gains.empty()) cfg.gains = parse_list(gains);
    if (!kv.empty()) cfg.kv = parse_number(kv, "--kv");
    if (!x0.empty()) cfg.x0 = parse_list(x0);
    if (!horizon.empty()) cfg.horizon = parse_number(horizon, "--horizon");
    if (!dt.empty()) cfg.dt = parse_number(dt, "--dt");
    if (!rtol.empty()) cfg.rtol = parse_number(rtol, "--rtol");
    if (!atol.empty()) cfg.atol = parse_number(atol, "--atol");
    if (!tol.empty()) cfg.tol = parse_number(tol, "--tol");
    if (!samples.empty()) cfg.samples = static_cast<int>(parse_number(samples, "--samples"));
    if (!seed.empty()) cfg.seed = static_cast<std::uint64_t>(parse_number(seed, "--seed"));
    if (!out_path.empty()) cfg.out = out_path;
    if (!summary.empty()) cfg.summary = summary;
    if (numeric_case) cfg.numeric_case = true;
    if (cfg.samples <= 0) throw Error(ErrorCode::InvalidArgument, "--samples must be positive");
    if (cfg.numeric_case && !cfg.benchmark.empty() && cfg.benchmark != "pendubot") {
      throw Error(ErrorCode::InvalidArgument, "--numeric-case only applies to pendubot");
    }

    if (cfg.command == "verify") return cmd_verify(cfg, out, err);
    if (cfg.command == "gains") return cmd_gains(cfg, out, err);
    if (cfg.command == "simulate") return cmd_simulate(cfg, out, err);
    return cmd_residuals(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace idapbc::cli
