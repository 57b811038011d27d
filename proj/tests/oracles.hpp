#pragma once

// Reference computations for tests, written independently of the library
// internals: plain formulas, brute-force grids and quadrature.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace oracle {

struct Prior {
  double a = 1.0, b = 1.0, c = 0.0, d = 0.0;
};

// Log posterior over (xi, sigma), up to a constant, term by term.
inline double log_post(const Prior& p, std::span<const double> v, double xi, double sigma) {
  if (!(xi > 0.0 && xi < 1.0 && sigma > 0.0)) return -std::numeric_limits<double>::infinity();
  long double s = 0.0L;
  for (double x : v) s += std::log1p(static_cast<long double>(xi) * x / sigma);
  const double n = static_cast<double>(v.size());
  return static_cast<double>(-(1.0L + xi) / xi * s) + (p.a - 1.0) * std::log(xi) + (p.b - 1.0) * std::log1p(-xi) +
         (p.c - n - 1.0) * std::log(sigma) - p.d * sigma;
}

struct GridMax {
  double xi = 0.0;
  double sigma = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

// Brute-force maximizer over a lattice in (xi, log sigma).
inline GridMax grid_argmax(const Prior& p, std::span<const double> v, double xi_lo, double xi_hi, int nxi,
                           double ls_lo, double ls_hi, int nls) {
  GridMax best;
  for (int i = 0; i <= nxi; ++i) {
    const double xi = xi_lo + (xi_hi - xi_lo) * i / nxi;
    for (int j = 0; j <= nls; ++j) {
      const double sigma = std::exp(ls_lo + (ls_hi - ls_lo) * j / nls);
      const double val = log_post(p, v, xi, sigma);
      if (val > best.value) best = {xi, sigma, val};
    }
  }
  return best;
}

struct Moments {
  double xi_mean = 0.0;
  double xi_var = 0.0;
  double lambda_mean = 0.0;
  double lambda_var = 0.0;
};

// Posterior moments by midpoint quadrature over a k x k grid on
// [xi_lo, xi_hi] x [sigma_lo, sigma_hi] in (xi, sigma) coordinates.
inline Moments quadrature(const Prior& p, std::span<const double> v, double xi_lo, double xi_hi, double sigma_lo,
                          double sigma_hi, int k) {
  std::vector<double> lp(static_cast<std::size_t>(k) * k);
  double top = -std::numeric_limits<double>::infinity();
  const double dx = (xi_hi - xi_lo) / k, ds = (sigma_hi - sigma_lo) / k;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const double val = log_post(p, v, xi_lo + (i + 0.5) * dx, sigma_lo + (j + 0.5) * ds);
      lp[static_cast<std::size_t>(i) * k + j] = val;
      top = std::max(top, val);
    }
  }
  long double w = 0, sx = 0, sxx = 0, sl = 0, sll = 0;
  for (int i = 0; i < k; ++i) {
    const double xi = xi_lo + (i + 0.5) * dx;
    for (int j = 0; j < k; ++j) {
      const double sigma = sigma_lo + (j + 0.5) * ds;
      const long double wt = std::exp(static_cast<long double>(lp[static_cast<std::size_t>(i) * k + j] - top));
      const double lambda = sigma / (1.0 - xi);
      w += wt;
      sx += wt * xi;
      sxx += wt * xi * xi;
      sl += wt * lambda;
      sll += wt * lambda * lambda;
    }
  }
  Moments m;
  m.xi_mean = static_cast<double>(sx / w);
  m.xi_var = static_cast<double>(sxx / w) - m.xi_mean * m.xi_mean;
  m.lambda_mean = static_cast<double>(sl / w);
  m.lambda_var = static_cast<double>(sll / w) - m.lambda_mean * m.lambda_mean;
  return m;
}

}  // namespace oracle
