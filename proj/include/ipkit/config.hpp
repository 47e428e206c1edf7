#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ipkit/bench.hpp"
#include "ipkit/errors.hpp"
#include "ipkit/ins.hpp"
#include "ipkit/ipm.hpp"
#include "ipkit/kkt_solver.hpp"

namespace ipkit {

// Merged run configuration: a flat dotted-key document plus command-line
// overrides. solver.* keys apply to both engines' linear-solve policies.
struct RunConfig {
  IpmConfig ipm;
  InsConfig ins;
  BenchProtocol bench;
  SweepSpec sweep;
  double solver_c_gamma = 0.0;  // > 0 derives delta_max = 0.5 (1 - sigma) / c_gamma
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  int jobs = 0;  // 0 = logical cores
  std::string log_level = "info";
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError(key + ": trailing characters in '" + v + "'");
    return d;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "' as a number");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long l = std::stol(v, &pos);
    if (pos != v.size()) throw ConfigError(key + ": trailing characters in '" + v + "'");
    return static_cast<int>(l);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "' as an integer");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long l = std::stoull(v, &pos);
    if (pos != v.size()) throw ConfigError(key + ": trailing characters in '" + v + "'");
    return static_cast<std::uint64_t>(l);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "' as an unsigned integer");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : v) {
    if (ch == ',') {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& p : split_list(v)) out.push_back(parse_double(key, p));
  return out;
}

inline void apply_solver_key(SolverPolicy& p, const std::string& key, const std::string& field,
                             const std::string& v) {
  if (field == "mode") {
    if (v == "direct") p.mode = SolverPolicy::Mode::direct;
    else if (v == "iterative") p.mode = SolverPolicy::Mode::iterative;
    else throw ConfigError(key + ": expected direct or iterative");
  } else if (field == "delta_max") {
    p.delta_max = parse_double(key, v);
  } else if (field == "forcing") {
    if (v == "constant") p.forcing = SolverPolicy::Forcing::constant;
    else if (v == "adaptive") p.forcing = SolverPolicy::Forcing::adaptive;
    else throw ConfigError(key + ": expected constant or adaptive");
  } else if (field == "precond") {
    if (v == "none") p.preconditioner = SolverPolicy::Precond::none;
    else if (v == "jacobi") p.preconditioner = SolverPolicy::Precond::jacobi;
    else if (v == "schur") p.preconditioner = SolverPolicy::Precond::schur;
    else throw ConfigError(key + ": expected none, jacobi or schur");
  } else if (field == "max_inner") {
    p.max_inner = parse_int(key, v);
  } else if (field == "restart") {
    p.restart = parse_int(key, v);
  } else if (field == "fallback_to_direct") {
    p.fallback_to_direct = parse_bool(key, v);
  } else {
    throw ConfigError("unknown key: " + key);
  }
}

}  // namespace detail

// Applies one dotted key. Unknown keys are errors; range validation happens in
// finalize_config once every source (file, then flags) has been applied.
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("unknown key: " + key);
  const std::string group = key.substr(0, dot);
  const std::string field = key.substr(dot + 1);

  if (group == "ipm") {
    if (field == "variant") {
      if (value == "short_step") cfg.ipm.variant = IpmVariant::short_step;
      else if (value == "long_step") cfg.ipm.variant = IpmVariant::long_step;
      else throw ConfigError(key + ": expected short_step or long_step");
    } else if (field == "gamma") cfg.ipm.gamma = detail::parse_double(key, value);
    else if (field == "tau") cfg.ipm.tau = detail::parse_double(key, value);
    else if (field == "eps_tol") cfg.ipm.eps_tol = detail::parse_double(key, value);
    else if (field == "sigma") cfg.ipm.sigma = detail::parse_double(key, value);
    else if (field == "max_iterations") cfg.ipm.max_iterations = detail::parse_int(key, value);
    else throw ConfigError("unknown key: " + key);
    return;
  }
  if (group == "ins") {
    if (field == "theta") cfg.ins.theta = detail::parse_double(key, value);
    else if (field == "alpha_scale") cfg.ins.alpha_scale = detail::parse_double(key, value);
    else if (field == "tau") cfg.ins.tau = detail::parse_double(key, value);
    else if (field == "eps_tol") cfg.ins.eps_tol = detail::parse_double(key, value);
    else if (field == "sigma") cfg.ins.sigma = detail::parse_double(key, value);
    else if (field == "max_iterations") cfg.ins.max_iterations = detail::parse_int(key, value);
    else if (field == "hessian_mode") {
      if (value == "exact") cfg.ins.hessian_mode = HessianMode::exact;
      else if (value == "bfgs") cfg.ins.hessian_mode = HessianMode::bfgs;
      else throw ConfigError(key + ": expected exact or bfgs");
    } else if (field == "ecnp_enabled") cfg.ins.ecnp_enabled = detail::parse_bool(key, value);
    else if (field == "ecnp_forcing") {
      if (value == "constant") cfg.ins.ecnp_forcing = InsConfig::EcnpForcing::constant;
      else if (value == "adaptive") cfg.ins.ecnp_forcing = InsConfig::EcnpForcing::adaptive;
      else throw ConfigError(key + ": expected constant or adaptive");
    } else if (field == "ecnp_eta") cfg.ins.ecnp_eta = detail::parse_double(key, value);
    else if (field == "backtracking.beta")
      cfg.ins.backtracking.beta = detail::parse_double(key, value);
    else if (field == "backtracking.c")
      cfg.ins.backtracking.c = detail::parse_double(key, value);
    else if (field == "backtracking.max_backtracks")
      cfg.ins.backtracking.max_backtracks = detail::parse_int(key, value);
    else throw ConfigError("unknown key: " + key);
    return;
  }
  if (group == "solver") {
    if (field == "c_gamma") {
      cfg.solver_c_gamma = detail::parse_double(key, value);
      if (!(cfg.solver_c_gamma > 0.0)) throw ConfigError(key + ": must be positive");
      return;
    }
    detail::apply_solver_key(cfg.ipm.solver, key, field, value);
    detail::apply_solver_key(cfg.ins.solver, key, field, value);
    return;
  }
  if (group == "bench") {
    if (field == "samples") cfg.bench.n_samples = detail::parse_int(key, value);
    else if (field == "n_variables") cfg.bench.n_variables = detail::parse_int(key, value);
    else if (field == "n_constraints") cfg.bench.n_constraints = detail::parse_int(key, value);
    else if (field == "family") cfg.bench.family = value;
    else if (field == "keep_traces") cfg.bench.keep_traces = detail::parse_bool(key, value);
    else throw ConfigError("unknown key: " + key);
    return;
  }
  if (group == "sweep") {
    if (field == "alpha_grid") cfg.sweep.alpha_grid = detail::parse_double_list(key, value);
    else if (field == "eps_grid") cfg.sweep.eps_grid = detail::parse_double_list(key, value);
    else if (field == "lambda_grid") cfg.sweep.lambda_grid = detail::parse_double_list(key, value);
    else if (field == "algorithms") cfg.sweep.algorithms = detail::split_list(value);
    else throw ConfigError("unknown key: " + key);
    return;
  }
  throw ConfigError("unknown key: " + key);
}

// Parses `key = value` lines; '#' starts a comment, blank lines are skipped.
inline void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    apply_config_key(cfg, key, value);
  }
}

// Derives coupled values and validates every group. Called after all sources.
inline void finalize_config(RunConfig& cfg) {
  if (cfg.solver_c_gamma > 0.0) {
    cfg.ipm.solver.delta_max = 0.5 * (1.0 - effective_sigma(cfg.ipm)) / cfg.solver_c_gamma;
    cfg.ins.solver.delta_max = 0.5 * (1.0 - effective_sigma(cfg.ins)) / cfg.solver_c_gamma;
  }
  validate_ipm_config(cfg.ipm);
  validate_ins_config(cfg.ins);
  validate_sweep_spec(cfg.sweep);
  if (cfg.bench.n_samples < 1) throw ConfigError("bench.samples must be >= 1");
  if (cfg.bench.n_variables < 1) throw ConfigError("bench.n_variables must be >= 1");
  if (cfg.bench.family != "simplex-lp" && cfg.bench.family != "simplex-qp")
    throw ConfigError("bench.family must be simplex-lp or simplex-qp");
  cfg.bench.base_seed = cfg.seed;
  cfg.bench.jobs = cfg.jobs > 0 ? cfg.jobs
                                : std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace ipkit
