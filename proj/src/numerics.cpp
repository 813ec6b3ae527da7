#include "mvlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mvlab::numerics {

double golden_section(const Fn1& f, double a, double b, bool maximize, int iters, double* arg_out) {
  const double sign = maximize ? 1.0 : -1.0;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = sign * f(c), fd = sign * f(d);
  for (int it = 0; it < iters && (b - a) > 1e-15 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = sign * f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = sign * f(d);
    }
  }
  const double x = 0.5 * (a + b);
  if (arg_out) *arg_out = x;
  return f(x);
}

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log grid needs 0 < lo < hi");
  std::vector<double> g(n);
  const double la = std::log(lo), lb = std::log(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace

ScanResult scan_extremum_log(const Fn1& f, double lo, double hi, bool maximize, int n_grid,
                             int golden_iters) {
  const double sign = maximize ? 1.0 : -1.0;
  const auto grid = log_grid(lo, hi, n_grid);
  int best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i) {
    const double v = sign * f(grid[i]);
    if (std::isfinite(v) && v > best_v) {
      best_v = v;
      best = i;
    }
  }
  ScanResult res;
  res.at_lower = best == 0;
  res.at_upper = best == n_grid - 1;
  const double a = grid[std::max(best - 1, 0)];
  const double b = grid[std::min(best + 1, n_grid - 1)];
  double arg = grid[best];
  double refined = best_v;
  if (b > a) refined = sign * golden_section(f, a, b, maximize, golden_iters, &arg);
  if (refined < best_v) {  // golden landed worse than the grid point; keep the grid point
    refined = best_v;
    arg = grid[best];
  }
  res.value = sign * refined;
  res.arg = arg;
  res.refine_change =
      std::abs(refined - best_v) / std::max(std::abs(refined), 1e-300);
  return res;
}

Scan2Result scan2_extremum_log(const Fn2& f, double lo1, double hi1, double lo2, double hi2,
                               bool maximize, int n_grid, int rounds) {
  const double sign = maximize ? 1.0 : -1.0;
  const auto g1 = log_grid(lo1, hi1, n_grid);
  const auto g2 = log_grid(lo2, hi2, n_grid);
  int b1 = 0, b2 = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_grid; ++i)
    for (int j = 0; j < n_grid; ++j) {
      const double v = sign * f(g1[i], g2[j]);
      if (std::isfinite(v) && v > best) {
        best = v;
        b1 = i;
        b2 = j;
      }
    }
  Scan2Result res;
  res.on_boundary = b1 == 0 || b1 == n_grid - 1 || b2 == 0 || b2 == n_grid - 1;
  double x1 = g1[b1], x2 = g2[b2];
  const double grid_best = sign * best;
  double cur = grid_best;
  for (int r = 0; r < rounds; ++r) {
    const double a1 = g1[std::max(b1 - 1, 0)], c1 = g1[std::min(b1 + 1, n_grid - 1)];
    if (c1 > a1) {
      double arg;
      const double v = golden_section([&](double t) { return f(t, x2); }, a1, c1, maximize, 120,
                                      &arg);
      if (sign * v >= sign * cur) {
        cur = v;
        x1 = arg;
      }
    }
    const double a2 = g2[std::max(b2 - 1, 0)], c2 = g2[std::min(b2 + 1, n_grid - 1)];
    if (c2 > a2) {
      double arg;
      const double v = golden_section([&](double m) { return f(x1, m); }, a2, c2, maximize, 120,
                                      &arg);
      if (sign * v >= sign * cur) {
        cur = v;
        x2 = arg;
      }
    }
  }
  res.value = cur;
  res.arg1 = x1;
  res.arg2 = x2;
  res.refine_change = std::abs(cur - grid_best) / std::max(std::abs(cur), 1e-300);
  return res;
}

double bisect(const Fn1& f, double lo, double hi, double tol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0))
    throw std::invalid_argument("bisect: no sign change on the bracket");
  for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

double simpson(const Fn1& f, double a, double fa, double m, double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const Fn1& f, double a, double fa, double m, double fm, double b,
                            double fb, double whole, double rel_tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, lm, flm, m, fm);
  const double right = simpson(f, m, fm, rm, frm, b, fb);
  const double err = left + right - whole;
  if (depth <= 0 || std::abs(err) <= 15.0 * rel_tol * (std::abs(left + right) + 1e-300))
    return left + right + err / 15.0;
  return adaptive_simpson_rec(f, a, fa, lm, flm, m, fm, left, rel_tol, depth - 1) +
         adaptive_simpson_rec(f, m, fm, rm, frm, b, fb, right, rel_tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const Fn1& f, double a, double b, double rel_tol, int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(f, a, fa, m, fm, b, fb);
  return adaptive_simpson_rec(f, a, fa, m, fm, b, fb, whole, rel_tol, max_depth);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 points");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.n = n;
  return fit;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return 0.5 * (v[mid - 1] + hi);
}

}  // namespace mvlab::numerics
