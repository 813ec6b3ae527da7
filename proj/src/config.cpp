#include "mvlab/config.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "mvlab/toml.hpp"

namespace mvlab::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) fail("'" + key + "' must be a number");
  return v.get<double>();
}

double get_num(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return as_number(obj.at(key), key);
}

std::string get_str(const json& obj, const std::string& key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) fail("'" + key + "' must be a string");
  return obj.at(key).get<std::string>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) fail("'" + key + "' must be a boolean");
  return obj.at(key).get<bool>();
}

std::vector<double> get_num_array(const json& obj, const std::string& key) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  if (!obj.at(key).is_array()) fail("'" + key + "' must be an array");
  for (const auto& v : obj.at(key)) out.push_back(as_number(v, key));
  return out;
}

void parse_model(const json& root, RunConfig& cfg) {
  if (!root.contains("model")) return;
  const json& m = root.at("model");
  if (!m.is_object()) fail("[model] must be a table");
  cfg.has_model = true;
  cfg.model_name = get_str(m, "name", "");
  if (cfg.model_name.empty()) fail("[model] requires 'name'");
  if (m.contains("params")) {
    for (const auto& [k, v] : m.at("params").items())
      cfg.model_params[k] = as_number(v, "model.params." + k);
  }
}

void parse_sim(const json& root, RunConfig& cfg) {
  if (!root.contains("sim")) return;
  const json& s = root.at("sim");
  cfg.sim.n_particles = static_cast<int>(get_num(s, "n_particles", cfg.sim.n_particles));
  cfg.sim.step = get_num(s, "step", cfg.sim.step);
  cfg.sim.horizon = get_num(s, "horizon", cfg.sim.horizon);
  cfg.sim.record_every = static_cast<int>(get_num(s, "record_every", cfg.sim.record_every));
  if (s.contains("seed")) cfg.sim.seed = static_cast<uint64_t>(get_num(s, "seed", 0));
  if (s.contains("taming_cap")) cfg.sim.taming_cap = get_num(s, "taming_cap", 0);
  if (s.contains("scheme")) cfg.sim.scheme = get_str(s, "scheme", cfg.sim.scheme);
  if (cfg.sim.step <= 0.0) fail("sim.step must be > 0");
  if (cfg.sim.horizon <= 0.0) fail("sim.horizon must be > 0");
  if (cfg.sim.n_particles < 1) fail("sim.n_particles must be >= 1");
  if (cfg.sim.record_every < 1) fail("sim.record_every must be >= 1");
}

void parse_init(const json& root, RunConfig& cfg) {
  if (!root.contains("init")) return;
  const json& s = root.at("init");
  cfg.init.kind = get_str(s, "kind", cfg.init.kind);
  if (cfg.init.kind != "dirac" && cfg.init.kind != "gaussian")
    fail("init.kind must be 'dirac' or 'gaussian'");
  if (s.contains("mean")) {
    if (s.at("mean").is_array())
      cfg.init.mean = get_num_array(s, "mean");
    else
      cfg.init.mean = {as_number(s.at("mean"), "init.mean")};
  }
  cfg.init.var = get_num(s, "var", cfg.init.var);
  if (cfg.init.var < 0.0) fail("init.var must be >= 0");
}

void parse_fixedpoint(const json& root, RunConfig& cfg) {
  if (!root.contains("fixedpoint")) return;
  const json& s = root.at("fixedpoint");
  cfg.fp_p = get_num(s, "p", cfg.fp_p);
  cfg.fp_tol = get_num(s, "tol", cfg.fp_tol);
  cfg.fp_max_iter = static_cast<int>(get_num(s, "max_iter", cfg.fp_max_iter));
  cfg.fp_burn_in = get_num(s, "burn_in", cfg.fp_burn_in);
  cfg.fp_merge_tol = get_num(s, "merge_tol", cfg.fp_merge_tol);
  cfg.fp_pooled = get_bool(s, "pooled", cfg.fp_pooled);
  if (cfg.fp_p < 1.0) fail("fixedpoint.p must be >= 1");
  if (cfg.fp_tol < 0.0) fail("fixedpoint.tol must be >= 0");
  if (cfg.fp_max_iter < 1) fail("fixedpoint.max_iter must be >= 1");
}

void parse_rates(const json& root, RunConfig& cfg) {
  if (!root.contains("rates")) return;
  const json& s = root.at("rates");
  cfg.has_rates = true;
  auto& in = cfg.rate_inputs;
  in.p = get_num(s, "p", in.p);
  in.K0 = get_num(s, "K0", in.K0);
  if (s.contains("K1")) in.K1 = as_number(s.at("K1"), "K1");
  if (s.contains("K3")) in.K3 = as_number(s.at("K3"), "K3");
  in.delta = get_num(s, "delta", in.delta);
  in.sigma0 = get_num(s, "sigma0", in.sigma0);
  in.sigma_sup = get_num(s, "sigma_sup", in.sigma_sup);
  in.C_hat = get_num(s, "C_hat", in.C_hat);
  in.lambda_hat = get_num(s, "lambda_hat", in.lambda_hat);
  in.kappa = get_num(s, "kappa", in.kappa);
  if (s.contains("kappa_t")) in.kappa_t_const = as_number(s.at("kappa_t"), "kappa_t");
  in.validate();

  cfg.require_verdict = get_bool(s, "require_verdict", false);
  if (s.contains("theorems")) {
    if (!s.at("theorems").is_array()) fail("rates.theorems must be an array of strings");
    for (const auto& t : s.at("theorems")) {
      if (!t.is_string()) fail("rates.theorems must be an array of strings");
      cfg.theorems.push_back(t.get<std::string>());
    }
  }
  const std::set<std::string> known{"prop21", "thm22", "thm23", "thm24", "cor25", "cor26"};
  for (const auto& t : cfg.theorems)
    if (!known.count(t)) fail("unknown theorem '" + t + "' in rates.theorems");
  if (cfg.theorems.empty()) cfg.theorems = {"prop21", "thm22"};

  cfg.thm24_box.t_min = get_num(s, "t_min", cfg.thm24_box.t_min);
  cfg.thm24_box.t_max = get_num(s, "t_max", cfg.thm24_box.t_max);
  cfg.thm24_box.theta_min = get_num(s, "theta_min", cfg.thm24_box.theta_min);
  cfg.thm24_box.theta_max = get_num(s, "theta_max", cfg.thm24_box.theta_max);
}

void parse_phase(const json& root, RunConfig& cfg) {
  if (!root.contains("phase")) return;
  const json& s = root.at("phase");
  cfg.scan_param = get_str(s, "param", "");
  cfg.scan_grid = get_num_array(s, "grid");
  cfg.scan_starts = get_num_array(s, "starts");
}

json echo_json(const RunConfig& cfg) {
  json e;
  e["command"] = cfg.command;
  e["output_dir"] = cfg.output_dir;
  e["format"] = cfg.format;
  e["seed"] = cfg.seed;
  e["threads"] = cfg.threads;
  if (cfg.has_model) {
    e["model"]["name"] = cfg.model_name;
    for (const auto& [k, v] : cfg.model_params) e["model"]["params"][k] = v;
  }
  e["sim"] = {{"n_particles", cfg.sim.n_particles}, {"step", cfg.sim.step},
              {"horizon", cfg.sim.horizon},         {"seed", cfg.sim.seed},
              {"record_every", cfg.sim.record_every}, {"scheme", cfg.sim.scheme}};
  if (std::isfinite(cfg.sim.taming_cap)) e["sim"]["taming_cap"] = cfg.sim.taming_cap;
  e["init"] = {{"kind", cfg.init.kind}, {"mean", cfg.init.mean}, {"var", cfg.init.var}};
  e["fixedpoint"] = {{"p", cfg.fp_p},           {"tol", cfg.fp_tol},
                     {"max_iter", cfg.fp_max_iter}, {"burn_in", cfg.fp_burn_in},
                     {"merge_tol", cfg.fp_merge_tol}, {"pooled", cfg.fp_pooled}};
  if (cfg.has_rates) {
    const auto& in = cfg.rate_inputs;
    json r = {{"p", in.p},           {"K0", in.K0},
              {"delta", in.delta},   {"sigma0", in.sigma0},
              {"C_hat", in.C_hat},   {"lambda_hat", in.lambda_hat},
              {"kappa", in.kappa},   {"require_verdict", cfg.require_verdict},
              {"theorems", cfg.theorems}};
    if (std::isfinite(in.sigma_sup)) r["sigma_sup"] = in.sigma_sup;
    if (in.K1) r["K1"] = *in.K1;
    if (in.K3) r["K3"] = *in.K3;
    if (in.kappa_t_const) r["kappa_t"] = *in.kappa_t_const;
    r["t_min"] = cfg.thm24_box.t_min;
    r["t_max"] = cfg.thm24_box.t_max;
    r["theta_min"] = cfg.thm24_box.theta_min;
    r["theta_max"] = cfg.thm24_box.theta_max;
    e["rates"] = r;
  }
  if (!cfg.scan_param.empty())
    e["phase"] = {{"param", cfg.scan_param}, {"grid", cfg.scan_grid}, {"starts", cfg.scan_starts}};
  if (cfg.mu_bar_csv) e["converge"]["mu_bar_csv"] = *cfg.mu_bar_csv;
  return e;
}

}  // namespace

EmpiricalMeasure InitSpec::materialize(int dim, int n, uint64_t seed) const {
  Eigen::VectorXd m(dim);
  if (static_cast<int>(mean.size()) == dim) {
    for (int i = 0; i < dim; ++i) m[i] = mean[i];
  } else if (mean.size() == 1) {
    m.setConstant(mean[0]);
  } else {
    fail("init.mean length does not match the model dimension");
  }
  if (kind == "dirac") return EmpiricalMeasure::dirac(m, n);
  GaussianMeasure g(m, var * Eigen::MatrixXd::Identity(dim, dim));
  return EmpiricalMeasure::gaussian_sample(g, n, seed, kStreamInit);
}

RunConfig parse_config(const std::string& text, const std::string& command_override) {
  const json root = toml::parse(text);

  RunConfig cfg;
  cfg.command = get_str(root, "command", "");
  if (!command_override.empty()) cfg.command = command_override;
  const std::set<std::string> commands{"simulate", "stationary", "converge", "rates",
                                       "phase-scan"};
  if (cfg.command.empty()) fail("missing 'command' (or pass one on the command line)");
  if (!commands.count(cfg.command)) fail("unknown command '" + cfg.command + "'");

  cfg.output_dir = get_str(root, "output_dir", cfg.output_dir);
  cfg.format = get_str(root, "format", cfg.format);
  if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "both")
    fail("format must be csv, json or both");
  if (root.contains("seed")) cfg.seed = static_cast<uint64_t>(as_number(root.at("seed"), "seed"));
  cfg.threads = static_cast<int>(get_num(root, "threads", 0));
  cfg.write_snapshots = get_bool(root, "write_snapshots", false);

  parse_model(root, cfg);
  parse_sim(root, cfg);
  parse_init(root, cfg);
  parse_fixedpoint(root, cfg);
  parse_rates(root, cfg);
  parse_phase(root, cfg);
  if (root.contains("converge") && root.at("converge").contains("mu_bar_csv"))
    cfg.mu_bar_csv = get_str(root.at("converge"), "mu_bar_csv", "");

  // seed precedence: top-level seed wins unless sim.seed was given explicitly
  if (root.contains("seed") && !(root.contains("sim") && root.at("sim").contains("seed")))
    cfg.sim.seed = cfg.seed;
  else
    cfg.seed = cfg.sim.seed;
  cfg.sim.threads = cfg.threads;

  const bool needs_model = cfg.command == "simulate" || cfg.command == "stationary" ||
                           cfg.command == "converge" || cfg.command == "phase-scan";
  if (needs_model && !cfg.has_model)
    fail("command '" + cfg.command + "' requires a [model] section");
  if (cfg.command == "rates" && !cfg.has_rates) fail("command 'rates' requires a [rates] section");
  if (cfg.command == "phase-scan") {
    if (cfg.scan_param.empty()) fail("phase-scan requires [phase] with 'param'");
    if (cfg.scan_grid.empty()) fail("phase-scan requires a non-empty phase.grid");
    if (cfg.scan_starts.size() < 2) fail("phase-scan requires >= 2 phase.starts");
  }

  cfg.sim.validate();
  cfg.resolved = echo_json(cfg);
  return cfg;
}

}  // namespace mvlab::cli
