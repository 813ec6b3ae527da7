#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mvlab/model.hpp"

namespace mvlab {

struct SimConfig {
  int n_particles = 10000;
  double step = 1e-3;
  double horizon = 10.0;
  uint64_t seed = 0;
  int record_every = 100;
  std::string scheme = "euler_maruyama";
  // euler taming: rescale the drift so |b| h <= taming_cap (off when infinite)
  double taming_cap = std::numeric_limits<double>::infinity();
  double explosion_bound = 1e8;  // p-th moment guard used by fixed-point drivers
  int threads = 0;               // 0 = library default; results are thread-count independent

  void validate() const;
  int n_steps() const { return static_cast<int>(std::ceil(horizon / step - 1e-12)); }
};

// Reference measure for per-snapshot W_p summaries.
struct TrajectoryRef {
  EmpiricalMeasure measure;
  double p = 2.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<EmpiricalMeasure> snapshots;
  // per-time summaries, aligned with times
  std::vector<Eigen::VectorXd> means;
  std::vector<double> pmoments;
  std::vector<double> wp_to_ref;  // empty unless a reference was supplied
  double summary_p = 2.0;
  bool taming_activated = false;

  // columns: t, mean_1..mean_d, pmoment[, wp_to_ref]
  void write_csv(const std::string& path) const;
  // full snapshots as snap_<index>.bin next to the CSV
  void write_snapshots(const std::string& dir) const;
};

struct CoupledPath {
  std::vector<double> times;
  std::vector<double> distances;  // pathwise (E|X-Y|^p)^{1/p} over pairs
  void write_csv(const std::string& path) const;
};

enum class Pairing { Sorted1D, Index };

// Interacting particle approximation of the distribution dependent SDE:
// the law argument is replaced by the running empirical measure.
Trajectory simulate_mv(const ModelSpec& model, const EmpiricalMeasure& init, const SimConfig& cfg,
                       const std::optional<TrajectoryRef>& ref = std::nullopt);

// Decoupled dynamics: coefficients frozen at a fixed measure, so particles
// are independent Monte Carlo samples of a classical SDE.
Trajectory simulate_decoupled(const ModelSpec& model, const EmpiricalMeasure& frozen_mu,
                              const EmpiricalMeasure& init, const SimConfig& cfg,
                              const std::optional<TrajectoryRef>& ref = std::nullopt);

// Two interacting systems driven by identical Gaussian increments per paired
// index; distances give pathwise upper bounds on W_p between the two laws.
CoupledPath simulate_synchronous_pair(const ModelSpec& model, const EmpiricalMeasure& muA,
                                      const EmpiricalMeasure& muB, Pairing pairing,
                                      const SimConfig& cfg, double p = 2.0);

}  // namespace mvlab
