#include "mvlab/wasserstein.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mvlab {

std::string to_string(WpEstimator e) {
  switch (e) {
    case WpEstimator::Exact1D: return "exact_1d";
    case WpEstimator::Assignment: return "assignment";
    case WpEstimator::Sinkhorn: return "sinkhorn";
  }
  return "unknown";
}

double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  if (mu.dim() != 1 || nu.dim() != 1) throw std::invalid_argument("wasserstein_1d: d must be 1");
  if (p < 1.0) throw std::invalid_argument("wasserstein_1d: p must be >= 1");

  // stable sort on input index breaks ties deterministically
  const auto order = [](const EmpiricalMeasure& m) {
    std::vector<int> idx(m.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return m.points(a, 0) < m.points(b, 0); });
    return idx;
  };
  const std::vector<int> ia = order(mu), ib = order(nu);

  // quantile coupling over the common refinement of the weight sequences
  double cost = 0.0;
  size_t i = 0, j = 0;
  double wi = mu.weights[ia[0]], wj = nu.weights[ib[0]];
  while (true) {
    const double m = std::min(wi, wj);
    if (m > 0.0)
      cost += m * std::pow(std::abs(mu.points(ia[i], 0) - nu.points(ib[j], 0)), p);
    wi -= m;
    wj -= m;
    const bool ia_done = (i + 1 == ia.size()), ib_done = (j + 1 == ib.size());
    if (wi <= 1e-15 && !ia_done) wi = mu.weights[ia[++i]];
    if (wj <= 1e-15 && !ib_done) wj = nu.weights[ib[++j]];
    if ((wi <= 1e-15 && ia_done) || (wj <= 1e-15 && ib_done)) break;
  }
  return std::pow(cost, 1.0 / p);
}

namespace {

// Shortest augmenting path assignment (Jonker-Volgenant potentials),
// O(n^3); exact for dense nonnegative costs.
double assignment_min_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // column -> row, 1-based, 0 = free
  for (int i = 1; i <= n; ++i) {
    std::vector<double> minv(n + 1, inf);
    std::vector<int> way(n + 1, 0);
    std::vector<char> used(n + 1, 0);
    int j0 = 0;
    match[0] = i;
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

Eigen::MatrixXd cost_matrix(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  Eigen::MatrixXd c(mu.size(), nu.size());
  for (int i = 0; i < mu.size(); ++i)
    for (int j = 0; j < nu.size(); ++j)
      c(i, j) = std::pow((mu.points.row(i) - nu.points.row(j)).norm(), p);
  return c;
}

}  // namespace

double wasserstein_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                              int cap) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("wasserstein_assignment: dim mismatch");
  if (mu.size() != nu.size()) throw std::invalid_argument("wasserstein_assignment: N mismatch");
  if (mu.size() > cap)
    throw std::invalid_argument("wasserstein_assignment: N exceeds cap " + std::to_string(cap));
  if (!mu.is_uniform() || !nu.is_uniform())
    throw std::invalid_argument("wasserstein_assignment: weights must be uniform");
  if (p < 1.0) throw std::invalid_argument("wasserstein_assignment: p must be >= 1");

  const double total = assignment_min_cost(cost_matrix(mu, nu, p));
  return std::pow(total / static_cast<double>(mu.size()), 1.0 / p);
}

namespace {

// one half of the log-domain Sinkhorn update; returns new f
void lse_update(const Eigen::MatrixXd& cost, const Eigen::VectorXd& logw_other,
                const Eigen::VectorXd& g, double eps, Eigen::VectorXd& f_out, bool rows) {
  const int n = rows ? static_cast<int>(cost.rows()) : static_cast<int>(cost.cols());
  const int m = rows ? static_cast<int>(cost.cols()) : static_cast<int>(cost.rows());
  for (int i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      const double c = rows ? cost(i, j) : cost(j, i);
      mx = std::max(mx, (g[j] - c) / eps + logw_other[j]);
    }
    double s = 0.0;
    for (int j = 0; j < m; ++j) {
      const double c = rows ? cost(i, j) : cost(j, i);
      s += std::exp((g[j] - c) / eps + logw_other[j] - mx);
    }
    f_out[i] = -eps * (mx + std::log(s));
  }
}

struct EntropicResult {
  double value;     // <pi, C> + eps KL(pi | mu x nu)
  double residual;  // final marginal violation
  bool converged;
};

EntropicResult entropic_ot(const Eigen::MatrixXd& cost, const Eigen::VectorXd& wa,
                           const Eigen::VectorXd& wb, double eps, const SinkhornOptions& opts) {
  const int n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  const Eigen::VectorXd la = wa.array().log(), lb = wb.array().log();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);

  // eps-scaling warm start: halve from a coarse regularization down to eps
  double cur = std::max(eps, cost.maxCoeff() / 2.0 + eps);
  while (cur > eps) {
    for (int it = 0; it < 10; ++it) {
      lse_update(cost, lb, g, cur, f, true);
      lse_update(cost, la, f, cur, g, false);
    }
    cur = std::max(eps, cur / 2.0);
  }

  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    lse_update(cost, lb, g, eps, f, true);
    lse_update(cost, la, f, eps, g, false);
    // after a g-update column marginals are exact; check rows
    residual = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += std::exp((f[i] + g[j] - cost(i, j)) / eps + la[i] + lb[j]);
      residual = std::max(residual, std::abs(s - wa[i]));
    }
    if (residual <= opts.marginal_tol) {
      converged = true;
      break;
    }
  }

  // primal value of the entropic problem from the plan
  double value = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double lp = (f[i] + g[j] - cost(i, j)) / eps + la[i] + lb[j];
      const double pij = std::exp(lp);
      if (pij > 0.0) value += pij * cost(i, j) + eps * pij * (lp - la[i] - lb[j]);
    }
  return {value, residual, converged};
}

}  // namespace

double median_pairwise_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  std::vector<double> c;
  c.reserve(static_cast<size_t>(mu.size()) * nu.size());
  for (int i = 0; i < mu.size(); ++i)
    for (int j = 0; j < nu.size(); ++j)
      c.push_back(std::pow((mu.points.row(i) - nu.points.row(j)).norm(), p));
  std::nth_element(c.begin(), c.begin() + c.size() / 2, c.end());
  return c[c.size() / 2];
}

double wasserstein_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                            double reg, const SinkhornOptions& opts) {
  if (mu.dim() != nu.dim()) throw std::invalid_argument("wasserstein_sinkhorn: dim mismatch");
  if (reg <= 0.0) throw std::invalid_argument("wasserstein_sinkhorn: reg must be > 0");
  if (p < 1.0) throw std::invalid_argument("wasserstein_sinkhorn: p must be >= 1");

  const auto ab = entropic_ot(cost_matrix(mu, nu, p), mu.weights, nu.weights, reg, opts);
  if (!ab.converged) throw SinkhornError(ab.residual);
  double s = ab.value;
  if (opts.debias) {
    const auto aa = entropic_ot(cost_matrix(mu, mu, p), mu.weights, mu.weights, reg, opts);
    const auto bb = entropic_ot(cost_matrix(nu, nu, p), nu.weights, nu.weights, reg, opts);
    if (!aa.converged) throw SinkhornError(aa.residual);
    if (!bb.converged) throw SinkhornError(bb.residual);
    s -= 0.5 * (aa.value + bb.value);
  }
  return std::pow(std::max(s, 0.0), 1.0 / p);
}

WpValue wasserstein_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                         int assignment_cap) {
  if (mu.dim() == 1 && nu.dim() == 1) return {wasserstein_1d(mu, nu, p), WpEstimator::Exact1D};
  if (mu.size() == nu.size() && mu.size() <= assignment_cap && mu.is_uniform() && nu.is_uniform())
    return {wasserstein_assignment(mu, nu, p, assignment_cap), WpEstimator::Assignment};
  const double reg = std::max(1e-2 * median_pairwise_cost(mu, nu, p), 1e-12);
  return {wasserstein_sinkhorn(mu, nu, p, reg), WpEstimator::Sinkhorn};
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

double gaussian_w2(const GaussianMeasure& g1, const GaussianMeasure& g2) {
  g1.validate();
  g2.validate();
  if (g1.dim() != g2.dim()) throw std::invalid_argument("gaussian_w2: dim mismatch");
  const double dm2 = (g1.mean - g2.mean).squaredNorm();
  if (g1.dim() == 1) {
    const double s1 = std::sqrt(std::max(g1.cov(0, 0), 0.0));
    const double s2 = std::sqrt(std::max(g2.cov(0, 0), 0.0));
    return std::sqrt(dm2 + (s1 - s2) * (s1 - s2));
  }
  const Eigen::MatrixXd r2 = psd_sqrt(g2.cov);
  const Eigen::MatrixXd cross = psd_sqrt(r2 * g1.cov * r2);
  const double tr = (g1.cov + g2.cov).trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(dm2 + tr, 0.0));
}

double gaussian_kl(const GaussianMeasure& g1, const GaussianMeasure& g2) {
  g1.validate();
  g2.validate();
  if (g1.dim() != g2.dim()) throw std::invalid_argument("gaussian_kl: dim mismatch");
  const int d = g1.dim();
  Eigen::LLT<Eigen::MatrixXd> llt(g2.cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("gaussian_kl: covariance of g2 is singular");
  const Eigen::MatrixXd inv2 = llt.solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::VectorXd dm = g2.mean - g1.mean;
  const double logdet2 =
      2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(g1.cov);
  double logdet1 = 0.0;
  for (int i = 0; i < d; ++i) {
    const double ev = es1.eigenvalues()[i];
    if (ev <= 0.0) throw std::invalid_argument("gaussian_kl: covariance of g1 is singular");
    logdet1 += std::log(ev);
  }
  const double kl =
      0.5 * ((inv2 * g1.cov).trace() + dm.dot(inv2 * dm) - d + logdet2 - logdet1);
  return std::max(kl, 0.0);
}

}  // namespace mvlab
