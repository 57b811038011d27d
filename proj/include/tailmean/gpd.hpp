#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tailmean/random.hpp"

namespace tailmean {

// Generalized Pareto exceedance model restricted to the finite-mean heavy-tail
// regime: 0 < xi < 1, sigma > 0. The constructor rejects anything else with
// ErrorKind::Domain; the free functions below assume a valid instance.
class GpdParams {
 public:
  GpdParams(double xi, double sigma);

  double xi() const noexcept { return xi_; }
  double sigma() const noexcept { return sigma_; }

  friend bool operator==(const GpdParams&, const GpdParams&) = default;

 private:
  double xi_;
  double sigma_;
};

// An exceedance z - u over a threshold. Must be finite and nonnegative.
class Exceedance {
 public:
  explicit Exceedance(double v);
  double value() const noexcept { return v_; }

 private:
  double v_;
};

double gpd_log_pdf(const GpdParams& params, Exceedance v);
double gpd_cdf(const GpdParams& params, Exceedance v);

// Inverse CDF. Throws ErrorKind::Domain unless 0 <= p < 1.
double gpd_quantile(const GpdParams& params, double p);

// `count` inverse-CDF draws; deterministic given the generator state.
std::vector<double> gpd_sample(const GpdParams& params, std::size_t count, Rng& rng);

// Mean exceedance sigma / (1 - xi).
inline double gpd_mean(const GpdParams& params) {
  return params.sigma() / (1.0 - params.xi());
}

}  // namespace tailmean
