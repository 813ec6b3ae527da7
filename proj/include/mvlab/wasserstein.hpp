#pragma once

#include <stdexcept>
#include <string>

#include "mvlab/measure.hpp"

namespace mvlab {

enum class WpEstimator { Exact1D, Assignment, Sinkhorn };

std::string to_string(WpEstimator e);

// Exact W_p in d = 1 via the quantile coupling; supports weighted inputs
// through a common refinement of the two weight sequences.
double wasserstein_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

// Exact W_p via optimal assignment on the cost matrix |x_i - y_j|^p.
// Requires uniform weights and equal N; N capped (default 512).
double wasserstein_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                              int cap = 512);

struct SinkhornOptions {
  double marginal_tol = 1e-9;  // L-inf violation of the column marginal
  int max_iter = 10000;
  bool debias = true;  // Sinkhorn divergence: S = OT(mu,nu) - (OT(mu,mu)+OT(nu,nu))/2
};

struct SinkhornError : std::runtime_error {
  double residual;
  explicit SinkhornError(double r)
      : std::runtime_error("sinkhorn failed to converge, marginal residual " + std::to_string(r)),
        residual(r) {}
};

// Entropically regularized W_p estimate (log-domain, eps-scaling warm start).
// Returns the debiased cost^{1/p}; bias is O(reg log N) before debiasing.
double wasserstein_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                            double reg, const SinkhornOptions& opts = {});

// median of |x_i - y_j|^p over the product of supports; reg scale helper
double median_pairwise_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

struct WpValue {
  double value = 0.0;
  WpEstimator estimator = WpEstimator::Exact1D;
};

// Accuracy ladder: exact 1-D when d = 1, exact assignment when feasible,
// Sinkhorn (reg = 1e-2 * median cost) otherwise.
WpValue wasserstein_auto(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                         int assignment_cap = 512);

// Bures-Wasserstein closed form between Gaussians.
double gaussian_w2(const GaussianMeasure& g1, const GaussianMeasure& g2);

// KL(g1 || g2); throws on singular cov of g2.
double gaussian_kl(const GaussianMeasure& g1, const GaussianMeasure& g2);

}  // namespace mvlab
