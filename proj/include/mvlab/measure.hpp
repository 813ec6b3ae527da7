#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "mvlab/rng.hpp"

namespace mvlab {

struct GaussianMeasure;

// Weighted point cloud in R^d; weights are nonnegative and sum to one.
struct EmpiricalMeasure {
  Eigen::MatrixXd points;   // N x d
  Eigen::VectorXd weights;  // N, uniform by default

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(Eigen::MatrixXd pts);
  EmpiricalMeasure(Eigen::MatrixXd pts, Eigen::VectorXd w);

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  bool is_uniform(double tol = 1e-12) const;

  Eigen::VectorXd mean() const;
  double pth_moment(double p) const;
  // sample variance per coordinate (weighted)
  Eigen::VectorXd variance() const;

  // throws std::invalid_argument on an invariant violation
  void validate() const;

  EmpiricalMeasure translated(const Eigen::VectorXd& v) const;
  EmpiricalMeasure pushforward(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) const;
  // n points drawn with replacement according to the weights
  EmpiricalMeasure resample(int n, uint64_t seed, uint32_t stream = kStreamBootstrap) const;

  static EmpiricalMeasure dirac(const Eigen::VectorXd& x, int n = 1);
  static EmpiricalMeasure dirac1d(double x, int n = 1);
  static EmpiricalMeasure gaussian_sample(const GaussianMeasure& g, int n, uint64_t seed,
                                          uint32_t stream = kStreamOracle);

  // CSV: one point per row, optional trailing weight column.
  void write_csv(const std::string& path, bool with_weights = false) const;
  static EmpiricalMeasure read_csv(const std::string& path);
  // Binary: u64 N, u32 d, u32 flags (bit0 = weights present), then
  // row-major doubles, little-endian; weights appended when flagged.
  void write_binary(const std::string& path) const;
  static EmpiricalMeasure read_binary(const std::string& path);
};

struct GaussianMeasure {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  GaussianMeasure() = default;
  GaussianMeasure(Eigen::VectorXd m, Eigen::MatrixXd c);
  GaussianMeasure(double m, double variance);  // d = 1

  int dim() const { return static_cast<int>(mean.size()); }
  void validate() const;

  static GaussianMeasure standard(int d);
};

double pth_moment(const EmpiricalMeasure& mu, double p);

}  // namespace mvlab
