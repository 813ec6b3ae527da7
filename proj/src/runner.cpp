#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "mvlab/config.hpp"
#include "mvlab/fixedpoint.hpp"
#include "mvlab/model.hpp"
#include "mvlab/toml.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mvlab::cli {

nlohmann::json run_certificate_json(const RunConfig& cfg, const std::string& theorem);

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json meta_block(const RunConfig& cfg) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return json{{"generated_at", buf}, {"command", cfg.command}, {"seed", cfg.seed}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json certificate_to_json(const rates::RateCertificate& cert, const rates::RateInputs& in) {
  json opt = json::object();
  if (cert.optimizers.t) opt["t"] = *cert.optimizers.t;
  if (cert.optimizers.m) opt["m"] = *cert.optimizers.m;
  if (cert.optimizers.theta) opt["theta"] = *cert.optimizers.theta;

  json echo = {{"p", in.p},         {"K0", in.K0},   {"delta", in.delta},
               {"sigma0", in.sigma0}, {"C_hat", in.C_hat}, {"lambda_hat", in.lambda_hat},
               {"kappa", in.kappa}};
  if (std::isfinite(in.sigma_sup)) echo["sigma_sup"] = in.sigma_sup;
  if (in.K1) echo["K1"] = *in.K1;
  if (in.K3) echo["K3"] = *in.K3;
  if (in.kappa_t_const) echo["kappa_t"] = *in.kappa_t_const;

  json j = {{"name", cert.threshold_name},
            {"value", cert.value},
            {"optimizers", opt},
            {"verdict", cert.verdict},
            {"boundary_flag", cert.boundary_flag},
            {"refine_change", cert.refine_change},
            {"inputs_echo", echo}};
  j["lambda_bar"] = cert.lambda_bar ? json(*cert.lambda_bar) : json(nullptr);
  if (!cert.extras.empty()) {
    json ex = json::object();
    for (const auto& [k, v] : cert.extras) ex[k] = v;
    j["extras"] = ex;
  }
  return j;
}

ModelSpec build_model(const RunConfig& cfg) {
  return builtin_model(cfg.model_name, cfg.model_params);
}

fixedpoint::FixedPointOptions fp_options(const RunConfig& cfg) {
  fixedpoint::FixedPointOptions opts;
  opts.p = cfg.fp_p;
  opts.burn_in = cfg.fp_burn_in;
  opts.pooled = cfg.fp_pooled;
  return opts;
}

json stationary_to_json(const fixedpoint::StationaryResult& res) {
  json gaps = json::array();
  for (const double g : res.iterates) gaps.push_back(g);
  json means = json::array();
  for (const auto& m : res.iterate_means) means.push_back(vector_to_json(m));
  return json{{"converged", res.converged},
              {"iterations_used", res.iterations_used},
              {"stop_reason", res.stop_reason},
              {"contraction_estimate", res.contraction_estimate},
              {"noise_floor", res.noise_floor},
              {"estimator", to_string(res.estimator)},
              {"gaps", gaps},
              {"iterate_means", means},
              {"mean", vector_to_json(res.measure.mean())}};
}

int cmd_simulate(const RunConfig& cfg, const std::string& dir) {
  const ModelSpec model = build_model(cfg);
  const EmpiricalMeasure init =
      cfg.init.materialize(model.dim, cfg.sim.n_particles, derive_seed(cfg.seed, 11));
  const Trajectory traj = simulate_mv(model, init, cfg.sim);
  if (cfg.format != "json") traj.write_csv(dir + "/trajectory.csv");
  if (cfg.write_snapshots) traj.write_snapshots(dir);
  if (cfg.format != "csv") {
    json j = {{"meta", meta_block(cfg)},
              {"n_snapshots", traj.times.size()},
              {"taming_activated", traj.taming_activated},
              {"final_mean", vector_to_json(traj.means.back())},
              {"final_pmoment", traj.pmoments.back()}};
    write_json(dir + "/simulate.json", j);
  }
  return 0;
}

int cmd_stationary(const RunConfig& cfg, const std::string& dir) {
  const ModelSpec model = build_model(cfg);
  const EmpiricalMeasure mu0 =
      cfg.init.materialize(model.dim, cfg.sim.n_particles, derive_seed(cfg.seed, 11));
  const fixedpoint::StationaryResult res =
      fixedpoint::picard_solve(model, mu0, cfg.fp_tol, cfg.fp_max_iter, cfg.sim, fp_options(cfg));
  res.measure.write_csv(dir + "/stationary_measure.csv");
  json j = stationary_to_json(res);
  j["meta"] = meta_block(cfg);
  j["measure_csv"] = "stationary_measure.csv";
  write_json(dir + "/stationary.json", j);
  return 0;
}

int cmd_converge(const RunConfig& cfg, const std::string& dir) {
  const ModelSpec model = build_model(cfg);
  const EmpiricalMeasure mu0 =
      cfg.init.materialize(model.dim, cfg.sim.n_particles, derive_seed(cfg.seed, 11));

  EmpiricalMeasure mu_bar;
  json stationary_info;
  if (cfg.mu_bar_csv) {
    mu_bar = EmpiricalMeasure::read_csv(*cfg.mu_bar_csv);
    stationary_info = json{{"source", *cfg.mu_bar_csv}};
  } else {
    const auto res = fixedpoint::picard_solve(model, mu0, cfg.fp_tol, cfg.fp_max_iter, cfg.sim,
                                              fp_options(cfg));
    mu_bar = res.measure;
    stationary_info = stationary_to_json(res);
  }

  const Trajectory traj = fixedpoint::measure_convergence(model, mu0, mu_bar, cfg.sim, cfg.fp_p);
  if (cfg.format != "json") {
    std::ofstream out(dir + "/converge.csv");
    out << "t,wp\n";
    char buf[64];
    for (size_t k = 0; k < traj.times.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g", traj.times[k], traj.wp_to_ref[k]);
      out << buf << '\n';
    }
  }

  const double floor =
      fixedpoint::noise_floor(mu_bar, cfg.fp_p, derive_seed(cfg.seed, 29));
  std::vector<std::pair<double, double>> series;
  for (size_t k = 0; k < traj.times.size(); ++k)
    series.emplace_back(traj.times[k], traj.wp_to_ref[k]);

  json fit_json;
  try {
    const auto fit = fixedpoint::fit_exponential_rate(series, 3.0 * floor);
    fit_json = {{"C_bar", fit.C_bar},
                {"lambda_bar", fit.lambda_bar},
                {"r2", fit.r2},
                {"points_used", fit.points_used},
                {"degenerate", fit.degenerate}};
  } catch (const std::exception& e) {
    fit_json = {{"degenerate", true}, {"error", e.what()}};
  }

  json j = {{"meta", meta_block(cfg)},
            {"noise_floor", floor},
            {"fit", fit_json},
            {"stationary", stationary_info}};
  if (cfg.has_rates) {
    json certs = json::array();
    for (const auto& t : cfg.theorems) certs.push_back(run_certificate_json(cfg, t));
    j["rates_comparison"] = certs;
  }
  write_json(dir + "/converge.json", j);
  return 0;
}

int cmd_rates(const RunConfig& cfg, const std::string& dir) {
  bool any_inconclusive = false;
  json index = json::array();
  for (const auto& t : cfg.theorems) {
    const json c = run_certificate_json(cfg, t);
    write_json(dir + "/rates_" + t + ".json", c);
    any_inconclusive |= c.at("verdict").get<std::string>() == "inconclusive";
    index.push_back(c);
  }
  write_json(dir + "/rates.json", json{{"meta", meta_block(cfg)}, {"certificates", index}});
  return (cfg.require_verdict && any_inconclusive) ? 2 : 0;
}

int cmd_phase_scan(const RunConfig& cfg, const std::string& dir) {
  const fixedpoint::ModelFamily family = [&](double v) {
    auto params = cfg.model_params;
    params[cfg.scan_param] = v;
    return builtin_model(cfg.model_name, params);
  };
  std::vector<EmpiricalMeasure> starts;
  const ModelSpec probe = family(cfg.scan_grid.front());
  for (const double s : cfg.scan_starts)
    starts.push_back(EmpiricalMeasure::dirac(Eigen::VectorXd::Constant(probe.dim, s)));

  const auto report =
      fixedpoint::phase_scan(family, cfg.scan_param, cfg.scan_grid, starts, cfg.fp_tol,
                             cfg.fp_max_iter, cfg.sim, cfg.fp_merge_tol, fp_options(cfg));
  if (cfg.format != "json") report.write_csv(dir + "/phase_scan.csv");

  json cells = json::array();
  for (const auto& cell : report.cells) {
    json means = json::array();
    for (const auto& m : cell.means) means.push_back(vector_to_json(m));
    json dist = json::array();
    for (int i = 0; i < cell.distances.rows(); ++i) {
      json row = json::array();
      for (int jj = 0; jj < cell.distances.cols(); ++jj) row.push_back(cell.distances(i, jj));
      dist.push_back(row);
    }
    cells.push_back(json{{"param_value", cell.parameter},
                         {"means", means},
                         {"cluster", cell.cluster},
                         {"distances", dist},
                         {"multiplicity", cell.multiplicity},
                         {"merge_tol", cell.merge_tol},
                         {"errors", cell.errors}});
  }
  write_json(dir + "/phase_scan.json", json{{"meta", meta_block(cfg)},
                                            {"param", report.parameter_name},
                                            {"grid", report.parameter_grid},
                                            {"multiplicity", report.multiplicity},
                                            {"cells", cells}});
  return 0;
}

}  // namespace

int run(const RunConfig& cfg) {
  const std::string dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text(dir + "/config.resolved.toml", toml::dump(cfg.resolved));

#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#endif

  if (cfg.command == "simulate") return cmd_simulate(cfg, dir);
  if (cfg.command == "stationary") return cmd_stationary(cfg, dir);
  if (cfg.command == "converge") return cmd_converge(cfg, dir);
  if (cfg.command == "rates") return cmd_rates(cfg, dir);
  if (cfg.command == "phase-scan") return cmd_phase_scan(cfg, dir);
  throw std::invalid_argument("unknown command '" + cfg.command + "'");
}

nlohmann::json run_certificate_json(const RunConfig& cfg, const std::string& theorem) {
  const auto& in = cfg.rate_inputs;
  rates::RateCertificate cert;
  if (theorem == "prop21") {
    cert = rates::delta0_prop21(in);
  } else if (theorem == "thm22") {
    cert = rates::delta0_thm22(in);
  } else if (theorem == "thm23") {
    cert = in.p == 2.0 ? rates::thm23_p2_certificate(in) : rates::delta1_thm23_general(in);
  } else if (theorem == "thm24") {
    cert = rates::delta2_thm24(in, cfg.thm24_box);
  } else if (theorem == "cor25") {
    cert = rates::cor25_certificate(in);
  } else if (theorem == "cor26") {
    cert = rates::cor26_delta0(in);
  } else {
    throw std::invalid_argument("unknown theorem '" + theorem + "'");
  }
  return certificate_to_json(cert, in);
}

}  // namespace mvlab::cli
