#include "mvlab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mvlab/rng.hpp"
#include "mvlab/wasserstein.hpp"

namespace mvlab {

void SimConfig::validate() const {
  if (n_particles < 1) throw std::invalid_argument("sim: n_particles must be >= 1");
  if (step <= 0.0) throw std::invalid_argument("sim: step must be > 0");
  if (horizon <= 0.0) throw std::invalid_argument("sim: horizon must be > 0");
  if (step > horizon) throw std::invalid_argument("sim: step must be <= horizon");
  if (record_every < 1) throw std::invalid_argument("sim: record_every must be >= 1");
  if (record_every * step > horizon + 1e-12)
    throw std::invalid_argument("sim: record_every * step must be <= horizon");
  if (scheme != "euler_maruyama") throw std::invalid_argument("sim: unknown scheme " + scheme);
  if (taming_cap <= 0.0) throw std::invalid_argument("sim: taming_cap must be > 0");
}

namespace {

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (size_t j = 0; j < header.size(); ++j) out << header[j] << (j + 1 < header.size() ? "," : "");
  out << '\n';
  char buf[64];
  for (const auto& row : rows) {
    for (size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      out << buf << (j + 1 < row.size() ? "," : "");
    }
    out << '\n';
  }
}

Eigen::MatrixXd starting_state(const EmpiricalMeasure& init, const SimConfig& cfg) {
  if (init.size() == cfg.n_particles && init.is_uniform()) return init.points;
  return init.resample(cfg.n_particles, cfg.seed, kStreamInit).points;
}

int effective_threads(const SimConfig& cfg) {
#ifdef _OPENMP
  return cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#else
  (void)cfg;
  return 1;
#endif
}

// One Euler-Maruyama sweep over all particles. Noise is addressed by
// (particle, step), so the result does not depend on the thread count.
void em_step(const ModelSpec& model, const MeasureView& view, const CounterRng& rng,
             Eigen::MatrixXd& state, int step_index, const SimConfig& cfg, bool& tamed,
             int n_threads) {
  const int n = static_cast<int>(state.rows());
  const int d = static_cast<int>(state.cols());
  const double h = cfg.step;
  const double sqrt_h = std::sqrt(h);
  int bad_particle = -1;
  int tamed_flag = 0;

#pragma omp parallel for schedule(static) num_threads(n_threads) reduction(| : tamed_flag)
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = state.row(i).transpose();
    Eigen::VectorXd b = model.drift(x, view);
    if (std::isfinite(cfg.taming_cap)) {
      const double bh = b.norm() * h;
      if (bh > cfg.taming_cap) {
        b *= cfg.taming_cap / bh;
        tamed_flag |= 1;
      }
    }
    const Eigen::MatrixXd sig = model.diffusion(x, view);
    Eigen::VectorXd z(d);
    rng.fill_normals(static_cast<uint64_t>(i), static_cast<uint64_t>(step_index), z.data(), d);
    x += b * h + sqrt_h * (sig * z);
    if (!x.allFinite()) {
#pragma omp critical
      bad_particle = i;
    }
    state.row(i) = x.transpose();
  }
  if (tamed_flag) tamed = true;
  if (bad_particle >= 0)
    throw std::runtime_error("simulation diverged at step " + std::to_string(step_index) +
                             ", particle " + std::to_string(bad_particle));
}

void record_snapshot(Trajectory& traj, double t, const Eigen::MatrixXd& state,
                     const std::optional<TrajectoryRef>& ref) {
  EmpiricalMeasure snap(state);
  traj.times.push_back(t);
  traj.means.push_back(snap.mean());
  traj.pmoments.push_back(snap.pth_moment(traj.summary_p));
  if (ref) traj.wp_to_ref.push_back(wasserstein_auto(snap, ref->measure, ref->p).value);
  traj.snapshots.push_back(std::move(snap));
}

Trajectory run_em(const ModelSpec& model, const EmpiricalMeasure* frozen,
                  const EmpiricalMeasure& init, const SimConfig& cfg,
                  const std::optional<TrajectoryRef>& ref) {
  cfg.validate();
  if (init.dim() != model.dim) throw std::invalid_argument("simulate: init dim != model dim");
  if (frozen && frozen->dim() != model.dim)
    throw std::invalid_argument("simulate: frozen measure dim != model dim");

  Eigen::MatrixXd state = starting_state(init, cfg);
  const CounterRng rng(cfg.seed, kStreamDynamics);
  const int n_threads = effective_threads(cfg);
  const int n_steps = cfg.n_steps();

  Trajectory traj;
  traj.summary_p = ref ? ref->p : 2.0;
  record_snapshot(traj, 0.0, state, ref);

  MeasureView frozen_view;
  if (frozen) frozen_view = model.view(*frozen);

  EmpiricalMeasure running;  // only materialized for full-cloud interactions
  for (int k = 0; k < n_steps; ++k) {
    MeasureView view;
    if (frozen) {
      view = frozen_view;
    } else if (model.measure_feature == MeasureFeature::FullCloud) {
      running = EmpiricalMeasure(state);
      view = model.view(running);
    } else {
      view.mean = state.colwise().mean().transpose();
    }
    em_step(model, view, rng, state, k, cfg, traj.taming_activated, n_threads);
    if ((k + 1) % cfg.record_every == 0 || k + 1 == n_steps)
      record_snapshot(traj, (k + 1) * cfg.step, state, ref);
  }
  return traj;
}

}  // namespace

Trajectory simulate_mv(const ModelSpec& model, const EmpiricalMeasure& init, const SimConfig& cfg,
                       const std::optional<TrajectoryRef>& ref) {
  if (cfg.n_particles < 2)
    throw std::invalid_argument("simulate_mv: interacting runs need n_particles >= 2");
  return run_em(model, nullptr, init, cfg, ref);
}

Trajectory simulate_decoupled(const ModelSpec& model, const EmpiricalMeasure& frozen_mu,
                              const EmpiricalMeasure& init, const SimConfig& cfg,
                              const std::optional<TrajectoryRef>& ref) {
  return run_em(model, &frozen_mu, init, cfg, ref);
}

CoupledPath simulate_synchronous_pair(const ModelSpec& model, const EmpiricalMeasure& muA,
                                      const EmpiricalMeasure& muB, Pairing pairing,
                                      const SimConfig& cfg, double p) {
  cfg.validate();
  if (muA.size() != muB.size())
    throw std::invalid_argument("simulate_synchronous_pair: clouds must have equal N");
  if (pairing == Pairing::Sorted1D && model.dim != 1)
    throw std::invalid_argument("simulate_synchronous_pair: sorted_1d pairing needs d = 1");

  Eigen::MatrixXd a = starting_state(muA, cfg);
  Eigen::MatrixXd b = starting_state(muB, cfg);
  if (pairing == Pairing::Sorted1D) {
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
  }

  const CounterRng rng(cfg.seed, kStreamDynamics);
  const int n_threads = effective_threads(cfg);
  const int n_steps = cfg.n_steps();
  const int n = static_cast<int>(a.rows());

  const auto pair_distance = [&](const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::pow((xa.row(i) - xb.row(i)).norm(), p);
    return std::pow(acc / static_cast<double>(n), 1.0 / p);
  };

  CoupledPath path;
  path.times.push_back(0.0);
  path.distances.push_back(pair_distance(a, b));

  bool tamed = false;
  for (int k = 0; k < n_steps; ++k) {
    MeasureView va, vb;
    va.mean = a.colwise().mean().transpose();
    vb.mean = b.colwise().mean().transpose();
    EmpiricalMeasure ca, cb;
    if (model.measure_feature == MeasureFeature::FullCloud) {
      ca = EmpiricalMeasure(a);
      cb = EmpiricalMeasure(b);
      va.cloud = &ca;
      vb.cloud = &cb;
    }
    // same rng and addresses: both systems consume identical increments
    em_step(model, va, rng, a, k, cfg, tamed, n_threads);
    em_step(model, vb, rng, b, k, cfg, tamed, n_threads);
    if ((k + 1) % cfg.record_every == 0 || k + 1 == n_steps) {
      path.times.push_back((k + 1) * cfg.step);
      path.distances.push_back(pair_distance(a, b));
    }
  }
  return path;
}

void Trajectory::write_csv(const std::string& path) const {
  const int d = snapshots.empty() ? 0 : snapshots.front().dim();
  std::vector<std::string> header;
  header.emplace_back("t");
  for (int j = 1; j <= d; ++j) header.push_back("mean_" + std::to_string(j));
  header.emplace_back("pmoment");
  if (!wp_to_ref.empty()) header.emplace_back("wp_to_ref");
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row;
    row.push_back(times[k]);
    for (int j = 0; j < d; ++j) row.push_back(means[k][j]);
    row.push_back(pmoments[k]);
    if (!wp_to_ref.empty()) row.push_back(wp_to_ref[k]);
    rows.push_back(std::move(row));
  }
  write_table_csv(path, header, rows);
}

void Trajectory::write_snapshots(const std::string& dir) const {
  for (size_t k = 0; k < snapshots.size(); ++k)
    snapshots[k].write_binary(dir + "/snap_" + std::to_string(k) + ".bin");
}

void CoupledPath::write_csv(const std::string& path) const {
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < times.size(); ++k) rows.push_back({times[k], distances[k]});
  write_table_csv(path, {"t", "distance"}, rows);
}

}  // namespace mvlab
