#pragma once

#include <functional>
#include <vector>

namespace mvlab::numerics {

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

struct ScanResult {
  double value = 0.0;
  double arg = 0.0;
  bool at_lower = false;  // optimum sits on the domain edge
  bool at_upper = false;
  double refine_change = 0.0;  // relative change between the last two refinement levels
};

struct Scan2Result {
  double value = 0.0;
  double arg1 = 0.0;  // first coordinate (t)
  double arg2 = 0.0;  // second coordinate (m or theta)
  bool on_boundary = false;
  double refine_change = 0.0;
};

// Golden-section extremum on [a, b]; maximize = false minimizes.
double golden_section(const Fn1& f, double a, double b, bool maximize, int iters = 120,
                      double* arg_out = nullptr);

// Log-spaced grid scan over [lo, hi] (0 < lo < hi) followed by golden-section
// refinement of the best bracket. Reports edge hits and the relative change
// between the grid level and the refined level.
ScanResult scan_extremum_log(const Fn1& f, double lo, double hi, bool maximize, int n_grid = 512,
                             int golden_iters = 160);

// Same over a log-spaced 2-D box with coordinate-wise golden refinement.
Scan2Result scan2_extremum_log(const Fn2& f, double lo1, double hi1, double lo2, double hi2,
                               bool maximize, int n_grid = 64, int rounds = 3);

// Root of a monotone function f on [lo, hi] with f(lo), f(hi) of opposite sign.
double bisect(const Fn1& f, double lo, double hi, double tol = 1e-10, int max_iter = 200);

// Adaptive Simpson quadrature to a relative tolerance.
double adaptive_simpson(const Fn1& f, double a, double b, double rel_tol = 1e-8,
                        int max_depth = 30);

// Ordinary least squares of y against x; returns slope, intercept and R^2.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int n = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

}  // namespace mvlab::numerics
