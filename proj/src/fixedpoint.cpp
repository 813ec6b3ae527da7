#include "mvlab/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "mvlab/numerics.hpp"
#include "mvlab/rng.hpp"

namespace mvlab::fixedpoint {

double noise_floor(const EmpiricalMeasure& m, double p, uint64_t seed, int reps) {
  double acc = 0.0;
  for (int r = 0; r < reps; ++r) {
    const EmpiricalMeasure a = m.resample(m.size(), derive_seed(seed, 2 * r));
    const EmpiricalMeasure b = m.resample(m.size(), derive_seed(seed, 2 * r + 1));
    acc += wasserstein_auto(a, b, p).value;
  }
  return acc / reps;
}

EmpiricalMeasure apply_T(const ModelSpec& model, const EmpiricalMeasure& mu, const SimConfig& cfg,
                         double burn_in, bool pooled, double explosion_bound) {
  if (burn_in >= cfg.horizon) throw std::invalid_argument("apply_T: burn_in must be < horizon");

  // spread initial cloud centred at the frozen mean
  GaussianMeasure start(mu.mean(), Eigen::MatrixXd::Identity(model.dim, model.dim));
  const EmpiricalMeasure init =
      EmpiricalMeasure::gaussian_sample(start, cfg.n_particles, cfg.seed, kStreamInit);

  SimConfig c = cfg;
  if (pooled) {
    c.record_every = std::max(1, c.n_steps() / 32);
  } else {
    c.record_every = c.n_steps();
  }
  const Trajectory traj = simulate_decoupled(model, mu, init, c);

  for (size_t k = 0; k < traj.times.size(); ++k) {
    if (!(traj.pmoments[k] < explosion_bound))
      throw std::runtime_error("apply_T: p-th moment " + std::to_string(traj.pmoments[k]) +
                               " exceeded the explosion bound at t = " +
                               std::to_string(traj.times[k]) +
                               "; frozen dynamics look non-ergodic");
  }

  if (!pooled) return traj.snapshots.back();

  int rows = 0;
  for (size_t k = 0; k < traj.times.size(); ++k)
    if (traj.times[k] >= burn_in) rows += traj.snapshots[k].size();
  if (rows == 0) return traj.snapshots.back();
  Eigen::MatrixXd pts(rows, model.dim);
  int at = 0;
  for (size_t k = 0; k < traj.times.size(); ++k) {
    if (traj.times[k] < burn_in) continue;
    const auto& snap = traj.snapshots[k];
    pts.middleRows(at, snap.size()) = snap.points;
    at += snap.size();
  }
  return EmpiricalMeasure(std::move(pts));
}

StationaryResult picard_solve(const ModelSpec& model, const EmpiricalMeasure& mu0, double tol,
                              int max_iter, const SimConfig& cfg, const FixedPointOptions& opts) {
  if (tol < 0.0) throw std::invalid_argument("picard_solve: tol must be >= 0");
  if (max_iter < 1) throw std::invalid_argument("picard_solve: max_iter must be >= 1");

  StationaryResult res;
  EmpiricalMeasure mu = mu0;
  res.stop_reason = "max_iter";
  for (int k = 0; k < max_iter; ++k) {
    SimConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<uint64_t>(k) + 1);
    EmpiricalMeasure next =
        apply_T(model, mu, c, opts.burn_in, opts.pooled, opts.explosion_bound);
    const WpValue gap = wasserstein_auto(mu, next, opts.p);
    res.estimator = gap.estimator;
    res.iterates.push_back(gap.value);
    res.iterate_means.push_back(next.mean());
    res.noise_floor =
        noise_floor(next, opts.p, derive_seed(cfg.seed, 7000 + static_cast<uint64_t>(k)),
                    opts.bootstrap_reps);
    mu = std::move(next);
    res.iterations_used = k + 1;
    const double threshold = std::max(tol, 3.0 * res.noise_floor);
    if (gap.value <= threshold) {
      res.converged = true;
      res.stop_reason = (tol > 0.0 && gap.value <= tol) ? "tol" : "noise_floor";
      break;
    }
  }
  res.measure = std::move(mu);

  // gap ratios above the floor feed the geometric-contraction estimate
  std::vector<double> ratios;
  for (size_t k = 1; k < res.iterates.size(); ++k)
    if (res.iterates[k - 1] > 3.0 * res.noise_floor && res.iterates[k - 1] > 0.0)
      ratios.push_back(res.iterates[k] / res.iterates[k - 1]);
  if (!ratios.empty()) res.contraction_estimate = numerics::median(ratios);
  return res;
}

double estimate_contraction(const ModelSpec& model, const EmpiricalMeasure& mu,
                            const EmpiricalMeasure& nu, const SimConfig& cfg,
                            const FixedPointOptions& opts) {
  // common random numbers: both runs share cfg.seed and therefore all noise
  const EmpiricalMeasure ta = apply_T(model, mu, cfg, opts.burn_in, opts.pooled,
                                      opts.explosion_bound);
  const EmpiricalMeasure tb = apply_T(model, nu, cfg, opts.burn_in, opts.pooled,
                                      opts.explosion_bound);
  const double w_in = wasserstein_auto(mu, nu, opts.p).value;
  const double floor =
      noise_floor(ta, opts.p, derive_seed(cfg.seed, 17), opts.bootstrap_reps);
  if (w_in < 10.0 * floor)
    throw std::invalid_argument("estimate_contraction: input distance " + std::to_string(w_in) +
                                " is inside the noise floor (" + std::to_string(floor) +
                                "); ratio indeterminate");
  return wasserstein_auto(ta, tb, opts.p).value / w_in;
}

ErgodicityEstimate estimate_ergodicity(const ModelSpec& model, const EmpiricalMeasure& frozen_mu,
                                       const std::vector<EmpiricalMeasure>& starts,
                                       const SimConfig& cfg, const FixedPointOptions& opts) {
  if (starts.empty()) throw std::invalid_argument("estimate_ergodicity: needs >= 1 start");

  SimConfig ct = cfg;
  ct.seed = derive_seed(cfg.seed, 101);
  const EmpiricalMeasure target =
      apply_T(model, frozen_mu, ct, opts.burn_in, opts.pooled, opts.explosion_bound);
  const double floor =
      noise_floor(target, opts.p, derive_seed(cfg.seed, 23), opts.bootstrap_reps);

  ErgodicityEstimate est;
  double best_r2 = -1.0;
  for (size_t s = 0; s < starts.size(); ++s) {
    SimConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 300 + s);
    c.record_every = std::max(1, c.n_steps() / 64);
    const Trajectory traj =
        simulate_decoupled(model, frozen_mu, starts[s], c, TrajectoryRef{target, opts.p});
    const double w0 = traj.wp_to_ref.front();
    std::vector<double> ts, lw;
    for (size_t k = 0; k < traj.times.size(); ++k) {
      if (traj.wp_to_ref[k] > 3.0 * floor) {
        ts.push_back(traj.times[k]);
        lw.push_back(std::log(traj.wp_to_ref[k]));
      }
    }
    if (ts.size() < 3 || w0 <= 3.0 * floor) continue;  // start degenerate for a rate fit
    const auto fit = numerics::fit_line(ts, lw);
    if (fit.slope >= 0.0) continue;
    const double c_hat = std::exp(fit.intercept) / w0;
    est.C_hat = std::max(est.C_hat, std::max(c_hat, 1.0));
    if (fit.r2 > best_r2) {
      best_r2 = fit.r2;
      est.lambda_hat = -fit.slope;
      est.fit_quality = fit.r2;
    }
  }
  est.usable = best_r2 >= 0.5 && est.lambda_hat > 0.0;
  return est;
}

Trajectory measure_convergence(const ModelSpec& model, const EmpiricalMeasure& mu0,
                               const EmpiricalMeasure& mu_bar, const SimConfig& cfg, double p) {
  return simulate_mv(model, mu0, cfg, TrajectoryRef{mu_bar, p});
}

ExpFit fit_exponential_rate(const std::vector<std::pair<double, double>>& series, double floor) {
  std::vector<double> ts, lw;
  for (const auto& [t, w] : series) {
    if (w > floor && w > 0.0) {
      ts.push_back(t);
      lw.push_back(std::log(w));
    }
  }
  ExpFit out;
  if (ts.size() < 3) {
    if (ts.empty()) throw std::invalid_argument("fit_exponential_rate: all points below floor");
    out.degenerate = true;
    return out;
  }
  const auto fit = numerics::fit_line(ts, lw);
  out.lambda_bar = -fit.slope;
  out.r2 = fit.r2;
  out.points_used = fit.n;
  double t0 = series.front().first, w0 = series.front().second;
  for (const auto& [t, w] : series)
    if (t < t0) {
      t0 = t;
      w0 = w;
    }
  out.C_bar = w0 > 0.0 ? std::exp(fit.intercept) / w0 : std::exp(fit.intercept);
  return out;
}

std::vector<double> make_grid(double lo, double hi, int n) {
  if (n < 3 || hi <= lo) throw std::invalid_argument("make_grid: need n >= 3 and hi > lo");
  if (n % 2 == 0) ++n;  // composite Simpson wants an even interval count
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + (hi - lo) * i / static_cast<double>(n - 1);
  return g;
}

namespace {

// composite Simpson weights on a uniform grid with an even interval count
double simpson_sum(const std::vector<double>& f, double h) {
  const int n = static_cast<int>(f.size());
  double acc = f[0] + f[n - 1];
  for (int i = 1; i < n - 1; ++i) acc += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

Density1D stationary_density_1d(const ModelSpec& model, const EmpiricalMeasure& mu,
                                const std::vector<double>& grid) {
  if (model.dim != 1) throw std::invalid_argument("stationary_density_1d: d must be 1");
  if (grid.size() < 3 || grid.size() % 2 == 0)
    throw std::invalid_argument("stationary_density_1d: grid needs an odd size >= 3");
  const int n = static_cast<int>(grid.size());
  const double h = grid[1] - grid[0];
  for (int i = 1; i < n; ++i)
    if (std::abs(grid[i] - grid[i - 1] - h) > 1e-9 * std::max(1.0, std::abs(h)))
      throw std::invalid_argument("stationary_density_1d: grid must be uniformly spaced");

  const MeasureView view = model.view(mu);
  const auto bx = [&](double x) {
    return model.drift(Eigen::VectorXd::Constant(1, x), view)[0];
  };
  const double s0 = model.diffusion(Eigen::VectorXd::Constant(1, grid[0]), view)(0, 0);
  for (int i = 1; i < n; ++i) {
    const double si = model.diffusion(Eigen::VectorXd::Constant(1, grid[i]), view)(0, 0);
    if (std::abs(si - s0) > 1e-12 * std::max(1.0, std::abs(s0)))
      throw std::invalid_argument("stationary_density_1d: sigma varies in x on the grid");
  }
  const double two_over_s2 = 2.0 / (s0 * s0);

  // cumulative potential integral along the grid
  std::vector<double> logrho(n, 0.0);
  for (int i = 1; i < n; ++i)
    logrho[i] = logrho[i - 1] +
                two_over_s2 * numerics::adaptive_simpson(bx, grid[i - 1], grid[i], 1e-10);
  const double mx = *std::max_element(logrho.begin(), logrho.end());

  Density1D out;
  out.grid = grid;
  out.density.resize(n);
  for (int i = 0; i < n; ++i) out.density[i] = std::exp(logrho[i] - mx);
  const double z = simpson_sum(out.density, h);
  if (!(z > 0.0) || !std::isfinite(z))
    throw std::runtime_error("stationary_density_1d: density not normalizable on the grid");
  for (double& d : out.density) d /= z;
  const double edge = std::max(out.density.front(), out.density.back());
  const double peak = *std::max_element(out.density.begin(), out.density.end());
  if (edge > 1e-6 * peak)
    throw std::runtime_error("stationary_density_1d: density mass leaks off the grid edge");

  std::vector<double> xf(n);
  for (int i = 0; i < n; ++i) xf[i] = grid[i] * out.density[i];
  out.mean = simpson_sum(xf, h);
  return out;
}

EmpiricalMeasure sample_from_density(const Density1D& dens, int n, uint64_t seed) {
  const int m = static_cast<int>(dens.grid.size());
  const double h = dens.grid[1] - dens.grid[0];
  // trapezoid CDF, then linear interpolation of the inverse
  std::vector<double> cdf(m, 0.0);
  for (int i = 1; i < m; ++i)
    cdf[i] = cdf[i - 1] + 0.5 * h * (dens.density[i - 1] + dens.density[i]);
  const double total = cdf.back();
  for (double& c : cdf) c /= total;

  const CounterRng rng(seed, kStreamOracle);
  Eigen::MatrixXd pts(n, 1);
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform(static_cast<uint64_t>(k), 0, 0);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int i = std::min(static_cast<int>(it - cdf.begin()), m - 1);
    i = std::max(i, 1);
    const double c0 = cdf[i - 1], c1 = cdf[i];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    pts(k, 0) = dens.grid[i - 1] + frac * h;
  }
  return EmpiricalMeasure(std::move(pts));
}

double stationary_mean_for_frozen_mean(const ModelSpec& model, double m,
                                       const std::vector<double>& grid) {
  return stationary_density_1d(model, EmpiricalMeasure::dirac1d(m), grid).mean;
}

PhaseScanReport phase_scan(const ModelFamily& family, const std::string& param_name,
                           const std::vector<double>& grid,
                           const std::vector<EmpiricalMeasure>& starts, double tol, int max_iter,
                           const SimConfig& cfg, double merge_tol,
                           const FixedPointOptions& opts) {
  if (starts.size() < 2) throw std::invalid_argument("phase_scan: needs >= 2 starts");
  PhaseScanReport report;
  report.parameter_name = param_name;
  report.parameter_grid = grid;

  for (size_t gi = 0; gi < grid.size(); ++gi) {
    PhaseScanCell cell;
    cell.parameter = grid[gi];
    const ModelSpec model = family(grid[gi]);

    std::vector<EmpiricalMeasure> fixed;
    std::vector<int> ok_index;
    double floor_max = 0.0;
    for (size_t s = 0; s < starts.size(); ++s) {
      SimConfig c = cfg;
      c.seed = derive_seed(cfg.seed, 5000 + gi * 131 + s);
      try {
        const StationaryResult r = picard_solve(model, starts[s], tol, max_iter, c, opts);
        cell.means.push_back(r.measure.mean());
        cell.errors.emplace_back(r.converged ? "" : "not converged after " +
                                                        std::to_string(r.iterations_used) +
                                                        " iterations");
        floor_max = std::max(floor_max, r.noise_floor);
        ok_index.push_back(static_cast<int>(s));
        fixed.push_back(r.measure);
      } catch (const std::exception& e) {
        cell.means.emplace_back(Eigen::VectorXd::Zero(0));
        cell.errors.emplace_back(e.what());
      }
    }

    const int k = static_cast<int>(fixed.size());
    cell.merge_tol = merge_tol > 0.0 ? merge_tol : 5.0 * floor_max;
    cell.distances = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        const double d = wasserstein_auto(fixed[i], fixed[j], opts.p).value;
        cell.distances(i, j) = cell.distances(j, i) = d;
      }

    // single-linkage clustering under the merge tolerance
    std::vector<int> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    const std::function<int(int)> find = [&](int a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        if (cell.distances(i, j) <= cell.merge_tol) parent[find(i)] = find(j);
    std::vector<int> roots;
    cell.cluster.assign(starts.size(), -1);
    for (int i = 0; i < k; ++i) {
      const int r = find(i);
      int id = -1;
      for (size_t q = 0; q < roots.size(); ++q)
        if (roots[q] == r) id = static_cast<int>(q);
      if (id < 0) {
        id = static_cast<int>(roots.size());
        roots.push_back(r);
      }
      cell.cluster[ok_index[i]] = id;
    }
    cell.multiplicity = static_cast<int>(roots.size());
    report.multiplicity.push_back(cell.multiplicity);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void PhaseScanReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  int d = 0;
  for (const auto& cell : cells)
    for (const auto& m : cell.means) d = std::max(d, static_cast<int>(m.size()));
  out << "param_value,start_id,converged";
  for (int j = 1; j <= d; ++j) out << ",fixed_point_mean_" << j;
  out << ",multiplicity\n";
  char buf[64];
  for (const auto& cell : cells) {
    for (size_t s = 0; s < cell.means.size(); ++s) {
      std::snprintf(buf, sizeof(buf), "%.17g", cell.parameter);
      out << buf << ',' << s << ',' << (cell.errors[s].empty() ? 1 : 0);
      for (int j = 0; j < d; ++j) {
        if (j < static_cast<int>(cell.means[s].size()))
          std::snprintf(buf, sizeof(buf), "%.17g", cell.means[s][j]);
        else
          std::snprintf(buf, sizeof(buf), "nan");
        out << ',' << buf;
      }
      out << ',' << cell.multiplicity << '\n';
    }
  }
}

}  // namespace mvlab::fixedpoint
