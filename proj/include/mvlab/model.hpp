#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "mvlab/measure.hpp"

namespace mvlab {

// Declared structural constants of a model. These are declarations, not
// inferred quantities; check_dissipativity can falsify them on samples but
// never proves them.
struct AssumptionConstants {
  double p = 2.0;       // Wasserstein order the bounds are stated in
  double K0 = 0.0;      // one-sided dissipativity constant
  std::optional<double> K1;  // outside-ball dissipativity (with r0)
  std::optional<double> r0;  // ball radius
  double delta = 0.0;   // interaction strength (coefficient of W_p^2)
  double sigma0 = 0.0;  // uniform ellipticity floor, 0 = undeclared
  double sigma_sup = std::numeric_limits<double>::infinity();  // sup HS norm of sigma

  void validate() const;
};

// Which summary of the measure argument the coefficients consume. Mean-type
// interactions cost O(N) per step; full-cloud kernels cost O(N^2).
enum class MeasureFeature { Mean, FullCloud };

// Summary of a measure handed to drift/diffusion callbacks.
struct MeasureView {
  Eigen::VectorXd mean;
  const EmpiricalMeasure* cloud = nullptr;  // non-null only for FullCloud models
};

using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, const MeasureView&)>;
using DiffusionFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const MeasureView&)>;

// Distribution-dependent coefficient pair. Immutable after construction and
// safe to share across threads; drift/diffusion must be deterministic.
struct ModelSpec {
  int dim = 1;
  std::string name = "custom";
  MeasureFeature measure_feature = MeasureFeature::Mean;
  DriftFn drift;
  DiffusionFn diffusion;
  AssumptionConstants constants;

  MeasureView view(const EmpiricalMeasure& mu) const;
};

// Zoo: mean_field_ou {a, c, s, d}, granular_media_1d {theta1, theta2, c, s},
// curie_weiss {theta, s}. Constants are filled analytically.
ModelSpec builtin_model(const std::string& name, const std::map<std::string, double>& params);

Eigen::VectorXd eval_drift(const ModelSpec& model, const Eigen::VectorXd& x,
                           const EmpiricalMeasure& mu);
Eigen::MatrixXd eval_diffusion(const ModelSpec& model, const Eigen::VectorXd& x,
                               const EmpiricalMeasure& mu);

struct PairSample {
  Eigen::VectorXd x, y;
  EmpiricalMeasure mu, nu;
};

using PairSampler = std::function<PairSample(int)>;

// Gaussian tuples at several spatial scales; spread dirac pairs included so
// understated interaction constants are caught.
PairSampler default_pair_sampler(const ModelSpec& model, uint64_t seed);

struct ViolationReport {
  double max_L = -std::numeric_limits<double>::infinity();       // (A1) form
  double max_L_ball = -std::numeric_limits<double>::infinity();  // (A2) form, if K1/r0 declared
  bool ball_form_checked = false;
  PairSample witness;  // arg max tuple over both forms
  double witness_L = -std::numeric_limits<double>::infinity();
  int samples = 0;

  bool violated(double tol = 1e-9) const {
    return max_L > tol || (ball_form_checked && max_L_ball > tol);
  }
};

// Evaluates, on n sampled tuples,
//   L = 2<b(x,mu)-b(y,nu), x-y> + (1+(p-2)^+) ||sigma(x,mu)-sigma(y,nu)||_HS^2
//       - K0 |x-y|^2 - delta^2 W_p(mu,nu)^2
// and, when K1/r0 are declared, the ball variant with the indicator right side
// and the (2 sigma_sup^2/sigma0^2 - 1_{d=1}) diffusion factor. Informational:
// returns the max and its witness, never throws on violations.
ViolationReport check_dissipativity(const ModelSpec& model, const PairSampler& sampler, int n);

}  // namespace mvlab
