#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>

namespace mvlab::rates {

// Ergodicity/Talagrand constants consumed by the threshold formulas. These
// are either supplied analytically or estimated empirically; nothing here
// derives them from model coefficients.
struct RateInputs {
  double p = 2.0;
  double K0 = 0.0;
  std::optional<double> K1;  // outside-ball dissipativity
  std::optional<double> K3;  // sub-Gaussian constant of the initial condition
  double delta = 0.0;        // interaction strength under test
  double sigma0 = 1.0;
  double sigma_sup = std::numeric_limits<double>::infinity();
  double C_hat = 1.0;      // prefactor of the decoupled convergence bound
  double lambda_hat = 1.0;  // decoupled exponential rate
  double kappa = 1.0;      // Talagrand constant of the invariant law
  // twinned Talagrand constant: a constant, a tabulated function, or absent
  // (falls back to kappa)
  std::optional<double> kappa_t_const;
  std::function<double(double)> kappa_t_fn;

  double kappa_t(double t) const;
  double t0() const;  // admissible window opens at lambda_hat^{-1} log C_hat
  void validate() const;
};

struct RateOptimizers {
  std::optional<double> t, m, theta;
};

struct RateCertificate {
  std::string threshold_name;
  double value = 0.0;
  RateOptimizers optimizers;
  std::string verdict = "inconclusive";  // unique_stationary | exponential_convergence | inconclusive
  std::optional<double> lambda_bar;
  bool boundary_flag = false;    // extremum attained on the search-domain edge
  double refine_change = 0.0;    // relative change between the last two refinement levels
  std::map<std::string, double> extras;
};

// K(m,p) = 2^{-1/(p v 2)} ((p v 2)(2m - K0) - (p-2)^+)^{1/(p v 2)}
double k_constant(double m, double p, double K0);

// Synchronous-coupling threshold: 1-D supremum over the admissible window.
RateCertificate delta0_prop21(const RateInputs& in);

// Talagrand-based threshold: 2-D supremum over (t, m).
RateCertificate delta0_thm22(const RateInputs& in);

// K0 < sigma0^2 / (2^{3-4/p} kappa) - (((p-2)/p)^{1/2} - (sigma0^2/(2^{3-4/p} kappa))^{1/2})^+ ^2
bool k0_pka_condition(const RateInputs& in);

// smallest v > 0 with v (v beta + beta - 2)^{-1/v} <= x
double phi_thm23(double x, double beta_hat);

// p = 2 closed forms: m_hat, beta_hat, the delta_1 lower bound and the
// explicit convergence rate when delta is admissible.
RateCertificate thm23_p2_certificate(const RateInputs& in);

// Gronwall contraction factor of the stationary-Talagrand route.
double gamma_thm23(const RateInputs& in, double delta, double m, double t);

// delta_1 as the infimum of delta with inf_{t,m} gamma >= 1 (outer bisection).
RateCertificate delta1_thm23_general(const RateInputs& in);

// Contraction factor of the twinned-Talagrand route.
double gamma_thm24(const RateInputs& in, double delta, double t, double theta);

struct SearchBox {
  double t_min = 0.05, t_max = 50.0;
  double theta_min = 0.05, theta_max = 100.0;
};

// delta_2 over a compact box; box-edge minima are flagged since the true
// infimum ranges over all t, theta > 0.
RateCertificate delta2_thm24(const RateInputs& in, const SearchBox& box = {});

// smallest v > 0 with v^{(v-1)/(v+1)} <= u, for u >= 1
double phi_cor25(double u);

// Ball-dissipativity corollary: delta_0, alpha, delta_2 and the explicit
// rate in the positive t^{-1} log(1/gamma) form.
RateCertificate cor25_certificate(const RateInputs& in);

// Measure-only-diffusion corollary: delta_0 plus the attached p = 2
// convergence certificate when K0 < sigma0^2/(2 kappa).
RateCertificate cor26_delta0(const RateInputs& in);

}  // namespace mvlab::rates
