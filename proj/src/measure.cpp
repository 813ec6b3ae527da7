#include "mvlab/measure.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace mvlab {

namespace {

void format_double(char* buf, size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd pts) : points(std::move(pts)) {
  weights = Eigen::VectorXd::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
  validate();
}

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd pts, Eigen::VectorXd w)
    : points(std::move(pts)), weights(std::move(w)) {
  validate();
}

bool EmpiricalMeasure::is_uniform(double tol) const {
  const double u = 1.0 / static_cast<double>(size());
  return (weights.array() - u).abs().maxCoeff() <= tol;
}

Eigen::VectorXd EmpiricalMeasure::mean() const { return points.transpose() * weights; }

double EmpiricalMeasure::pth_moment(double p) const {
  if (p < 1.0) throw std::invalid_argument("pth_moment: p must be >= 1");
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) acc += weights[i] * std::pow(points.row(i).norm(), p);
  return std::pow(acc, 1.0 / p);
}

Eigen::VectorXd EmpiricalMeasure::variance() const {
  const Eigen::VectorXd m = mean();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < size(); ++i) {
    const Eigen::VectorXd c = points.row(i).transpose() - m;
    v += weights[i] * c.cwiseProduct(c);
  }
  return v;
}

void EmpiricalMeasure::validate() const {
  if (points.rows() < 1) throw std::invalid_argument("EmpiricalMeasure: needs at least one point");
  if (weights.size() != points.rows())
    throw std::invalid_argument("EmpiricalMeasure: weights/points size mismatch");
  if (!points.allFinite()) throw std::invalid_argument("EmpiricalMeasure: non-finite point");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("EmpiricalMeasure: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("EmpiricalMeasure: weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::translated(const Eigen::VectorXd& v) const {
  EmpiricalMeasure out = *this;
  out.points.rowwise() += v.transpose();
  return out;
}

EmpiricalMeasure EmpiricalMeasure::pushforward(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) const {
  EmpiricalMeasure out = *this;
  for (int i = 0; i < size(); ++i) out.points.row(i) = f(points.row(i).transpose()).transpose();
  return out;
}

EmpiricalMeasure EmpiricalMeasure::resample(int n, uint64_t seed, uint32_t stream) const {
  const CounterRng rng(seed, stream);
  // inverse-CDF lookup over the weight prefix sums
  std::vector<double> cdf(size());
  double acc = 0.0;
  for (int i = 0; i < size(); ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  Eigen::MatrixXd pts(n, dim());
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform(static_cast<uint64_t>(k), 0, 0);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const int idx = static_cast<int>(it - cdf.begin());
    pts.row(k) = points.row(std::min(idx, size() - 1));
  }
  return EmpiricalMeasure(std::move(pts));
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Eigen::VectorXd& x, int n) {
  Eigen::MatrixXd pts(n, x.size());
  pts.rowwise() = x.transpose();
  return EmpiricalMeasure(std::move(pts));
}

EmpiricalMeasure EmpiricalMeasure::dirac1d(double x, int n) {
  return dirac(Eigen::VectorXd::Constant(1, x), n);
}

EmpiricalMeasure EmpiricalMeasure::gaussian_sample(const GaussianMeasure& g, int n, uint64_t seed,
                                                   uint32_t stream) {
  g.validate();
  const int d = g.dim();
  // PSD square root; LLT fails on semidefinite inputs, eigendecomposition does not
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
  const Eigen::MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const CounterRng rng(seed, stream);
  Eigen::MatrixXd pts(n, d);
  std::vector<double> z(d);
  for (int i = 0; i < n; ++i) {
    rng.fill_normals(static_cast<uint64_t>(i), 0, z.data(), d);
    Eigen::Map<const Eigen::VectorXd> zv(z.data(), d);
    pts.row(i) = (g.mean + root * zv).transpose();
  }
  return EmpiricalMeasure(std::move(pts));
}

void EmpiricalMeasure::write_csv(const std::string& path, bool with_weights) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[64];
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < dim(); ++j) {
      format_double(buf, sizeof(buf), points(i, j));
      out << buf;
      if (j + 1 < dim() || with_weights) out << ',';
    }
    if (with_weights) {
      format_double(buf, sizeof(buf), weights[i]);
      out << buf;
    }
    out << '\n';
  }
}

EmpiricalMeasure EmpiricalMeasure::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && rows.front().size() != row.size())
      throw std::runtime_error("ragged CSV: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty CSV: " + path);
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows.front().size());
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rows[i][j];
  return EmpiricalMeasure(std::move(pts));
}

void EmpiricalMeasure::write_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const uint64_t n = static_cast<uint64_t>(size());
  const uint32_t d = static_cast<uint32_t>(dim());
  const uint32_t flags = is_uniform() ? 0u : 1u;
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(&flags), sizeof(flags));
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < dim(); ++j) {
      const double v = points(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  if (flags & 1u)
    out.write(reinterpret_cast<const char*>(weights.data()),
              static_cast<std::streamsize>(sizeof(double) * n));
}

EmpiricalMeasure EmpiricalMeasure::read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  uint64_t n = 0;
  uint32_t d = 0, flags = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&d), sizeof(d));
  in.read(reinterpret_cast<char*>(&flags), sizeof(flags));
  if (!in || n == 0 || d == 0) throw std::runtime_error("bad binary header: " + path);
  Eigen::MatrixXd pts(static_cast<int>(n), static_cast<int>(d));
  for (uint64_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < d; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      pts(static_cast<int>(i), static_cast<int>(j)) = v;
    }
  if (flags & 1u) {
    Eigen::VectorXd w(static_cast<int>(n));
    in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(sizeof(double) * n));
    if (!in) throw std::runtime_error("truncated binary: " + path);
    return EmpiricalMeasure(std::move(pts), std::move(w));
  }
  if (!in) throw std::runtime_error("truncated binary: " + path);
  return EmpiricalMeasure(std::move(pts));
}

GaussianMeasure::GaussianMeasure(Eigen::VectorXd m, Eigen::MatrixXd c)
    : mean(std::move(m)), cov(std::move(c)) {
  validate();
}

GaussianMeasure::GaussianMeasure(double m, double variance)
    : mean(Eigen::VectorXd::Constant(1, m)), cov(Eigen::MatrixXd::Constant(1, 1, variance)) {
  validate();
}

void GaussianMeasure::validate() const {
  if (mean.size() < 1 || cov.rows() != mean.size() || cov.cols() != mean.size())
    throw std::invalid_argument("GaussianMeasure: dimension mismatch");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("GaussianMeasure: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("GaussianMeasure: covariance not PSD");
}

GaussianMeasure GaussianMeasure::standard(int d) {
  return GaussianMeasure(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
}

double pth_moment(const EmpiricalMeasure& mu, double p) { return mu.pth_moment(p); }

}  // namespace mvlab
