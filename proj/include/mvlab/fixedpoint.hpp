#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mvlab/simulate.hpp"
#include "mvlab/wasserstein.hpp"

namespace mvlab::fixedpoint {

struct FixedPointOptions {
  double p = 2.0;      // Wasserstein order for gaps and distances
  double burn_in = 0.0;
  bool pooled = false;  // pool post-burn-in snapshots instead of the terminal cloud
  double explosion_bound = 1e8;
  int bootstrap_reps = 4;
};

// Empirical resolution limit: mean W_p between bootstrap redraws of the same
// cloud. All convergence statements are made relative to it.
double noise_floor(const EmpiricalMeasure& m, double p, uint64_t seed, int reps = 4);

// One application of the map mu -> invariant law of the frozen-measure
// dynamics, estimated by integrating the decoupled system from a spread
// initial cloud. Throws when the p-th moment exceeds the explosion bound
// (non-ergodic frozen regime).
EmpiricalMeasure apply_T(const ModelSpec& model, const EmpiricalMeasure& mu, const SimConfig& cfg,
                         double burn_in, bool pooled = false, double explosion_bound = 1e8);

struct StationaryResult {
  EmpiricalMeasure measure;            // fixed point estimate
  std::vector<double> iterates;        // successive W_p gaps
  std::vector<Eigen::VectorXd> iterate_means;
  double contraction_estimate = 0.0;   // median of successive gap ratios
  bool converged = false;
  int iterations_used = 0;
  double noise_floor = 0.0;
  std::string stop_reason;  // "tol" | "noise_floor" | "max_iter"
  WpEstimator estimator = WpEstimator::Exact1D;
};

// Picard/Banach iteration mu_{k+1} = T(mu_k); stops when the gap falls under
// max(tol, 3 x noise floor) and records which bound fired. Persistent
// non-contraction is reported through converged = false, not an exception.
StationaryResult picard_solve(const ModelSpec& model, const EmpiricalMeasure& mu0, double tol,
                              int max_iter, const SimConfig& cfg,
                              const FixedPointOptions& opts = {});

// W_p(T mu, T nu) / W_p(mu, nu) with common random numbers across the two
// runs. Throws when the input distance is under 10 x noise floor.
double estimate_contraction(const ModelSpec& model, const EmpiricalMeasure& mu,
                            const EmpiricalMeasure& nu, const SimConfig& cfg,
                            const FixedPointOptions& opts = {});

struct ErgodicityEstimate {
  double C_hat = 1.0;
  double lambda_hat = 0.0;
  double fit_quality = 0.0;  // R^2 of the log-linear fit
  bool usable = false;
};

// Fits W_p((P_t)^* nu, T mu) ~ C_hat e^{-lambda_hat t} W_p(nu, T mu) over the
// pre-noise-floor window; worst-case C_hat across starts, best-supported
// lambda_hat.
ErgodicityEstimate estimate_ergodicity(const ModelSpec& model, const EmpiricalMeasure& frozen_mu,
                                       const std::vector<EmpiricalMeasure>& starts,
                                       const SimConfig& cfg, const FixedPointOptions& opts = {});

// Interacting run from mu0 with per-snapshot W_p distance to mu_bar recorded.
Trajectory measure_convergence(const ModelSpec& model, const EmpiricalMeasure& mu0,
                               const EmpiricalMeasure& mu_bar, const SimConfig& cfg,
                               double p = 2.0);

struct ExpFit {
  double C_bar = 0.0;       // exp(intercept) / w(0)
  double lambda_bar = 0.0;  // fitted decay rate
  double r2 = 0.0;
  int points_used = 0;
  bool degenerate = false;  // too few points above the floor
};

// Least squares of log w against t over the points above the floor.
ExpFit fit_exponential_rate(const std::vector<std::pair<double, double>>& series,
                            double floor = 0.0);

// Exact invariant density of a 1-D diffusion with constant-in-x sigma:
// rho(x) proportional to exp( (2/sigma^2) int_0^x b(y, mu) dy ).
struct Density1D {
  std::vector<double> grid;     // uniformly spaced, ascending
  std::vector<double> density;  // normalized by composite Simpson
  double mean = 0.0;
};

std::vector<double> make_grid(double lo, double hi, int n);

Density1D stationary_density_1d(const ModelSpec& model, const EmpiricalMeasure& mu,
                                const std::vector<double>& grid);

// inverse-CDF sampling from a tabulated density
EmpiricalMeasure sample_from_density(const Density1D& dens, int n, uint64_t seed);

// mean of the stationary density when the frozen measure is dirac(m)
double stationary_mean_for_frozen_mean(const ModelSpec& model, double m,
                                       const std::vector<double>& grid);

struct PhaseScanCell {
  double parameter = 0.0;
  std::vector<Eigen::VectorXd> means;    // per start (zero-dim when failed)
  std::vector<int> cluster;              // cluster id per start, -1 = failed
  Eigen::MatrixXd distances;             // pairwise W_p of fixed points
  int multiplicity = 0;                  // pairwise-distinct fixed points
  double merge_tol = 0.0;
  std::vector<std::string> errors;       // per start, empty when converged
};

struct PhaseScanReport {
  std::string parameter_name;
  std::vector<double> parameter_grid;
  std::vector<PhaseScanCell> cells;
  std::vector<int> multiplicity;  // per grid point

  // flat rows: param_value, start_id, converged, mean_1..mean_d, multiplicity
  void write_csv(const std::string& path) const;
};

using ModelFamily = std::function<ModelSpec(double)>;

// Runs picard_solve at every grid value from every start and clusters the
// resulting measures by pairwise W_p with the merge tolerance (default 5 x
// noise floor). Per-cell divergences are recorded; the scan continues.
PhaseScanReport phase_scan(const ModelFamily& family, const std::string& param_name,
                           const std::vector<double>& grid,
                           const std::vector<EmpiricalMeasure>& starts, double tol, int max_iter,
                           const SimConfig& cfg, double merge_tol,
                           const FixedPointOptions& opts = {});

}  // namespace mvlab::fixedpoint
