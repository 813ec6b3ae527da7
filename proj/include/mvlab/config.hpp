#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvlab/rates.hpp"
#include "mvlab/simulate.hpp"

namespace mvlab::cli {

struct InitSpec {
  std::string kind = "dirac";  // dirac | gaussian
  std::vector<double> mean{0.0};
  double var = 1.0;

  EmpiricalMeasure materialize(int dim, int n, uint64_t seed) const;
};

struct RunConfig {
  std::string command;  // simulate | stationary | converge | rates | phase-scan
  std::string output_dir = "out";
  std::string format = "both";  // csv | json | both
  uint64_t seed = 0;
  int threads = 0;

  bool has_model = false;
  std::string model_name;
  std::map<std::string, double> model_params;

  SimConfig sim;
  InitSpec init;
  bool write_snapshots = false;

  // fixed-point controls
  double fp_p = 2.0;
  double fp_tol = 0.0;
  int fp_max_iter = 30;
  double fp_burn_in = 0.0;
  double fp_merge_tol = 0.0;
  bool fp_pooled = false;

  bool has_rates = false;
  rates::RateInputs rate_inputs;
  std::vector<std::string> theorems;  // prop21 thm22 thm23 thm24 cor25 cor26
  bool require_verdict = false;
  rates::SearchBox thm24_box;

  std::optional<std::string> mu_bar_csv;  // converge: reference measure override

  std::string scan_param;
  std::vector<double> scan_grid;
  std::vector<double> scan_starts;

  nlohmann::json resolved;  // effective config, echoed next to the artifacts
};

// Parses and validates a TOML run configuration; fills defaults and builds
// the resolved echo. Errors carry precise messages (missing section,
// out-of-range value, syntax position).
RunConfig parse_config(const std::string& text, const std::string& command_override = "");

// Dispatches a validated config; writes artifacts under output_dir. Returns
// 0 on success and 2 when a requested verdict came back inconclusive.
int run(const RunConfig& cfg);

}  // namespace mvlab::cli
