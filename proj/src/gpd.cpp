#include "tailmean/gpd.hpp"

#include <cmath>
#include <string>

#include "tailmean/errors.hpp"

namespace tailmean {

GpdParams::GpdParams(double xi, double sigma) : xi_(xi), sigma_(sigma) {
  if (!(xi > 0.0 && xi < 1.0)) {
    throw Error(ErrorKind::Domain, "GPD tail index must lie in (0, 1), got " + std::to_string(xi));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::Domain, "GPD scale must be positive and finite, got " + std::to_string(sigma));
  }
}

Exceedance::Exceedance(double v) : v_(v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorKind::Domain, "exceedance must be finite and nonnegative, got " + std::to_string(v));
  }
}

double gpd_log_pdf(const GpdParams& params, Exceedance v) {
  const double xi = params.xi();
  const double sigma = params.sigma();
  return -std::log(sigma) - (1.0 / xi + 1.0) * std::log1p(xi * v.value() / sigma);
}

double gpd_cdf(const GpdParams& params, Exceedance v) {
  const double xi = params.xi();
  // 1 - exp(-(1/xi) log1p(xi v / sigma)), kept in expm1 form for small v.
  return -std::expm1(-std::log1p(xi * v.value() / params.sigma()) / xi);
}

double gpd_quantile(const GpdParams& params, double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorKind::Domain, "quantile probability must lie in [0, 1), got " + std::to_string(p));
  }
  const double xi = params.xi();
  // (sigma / xi) * ((1 - p)^(-xi) - 1)
  return params.sigma() / xi * std::expm1(-xi * std::log1p(-p));
}

std::vector<double> gpd_sample(const GpdParams& params, std::size_t count, Rng& rng) {
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(gpd_quantile(params, rng.uniform()));
  }
  return out;
}

}  // namespace tailmean
