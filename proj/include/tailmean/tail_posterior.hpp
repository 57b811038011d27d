#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tailmean/gpd.hpp"
#include "tailmean/optimize.hpp"

namespace tailmean {

// Beta(a, b) prior on the tail index times Gamma(c, d) (shape, rate) on the
// scale. c = d = 0 is the improper 1/sigma reference limit.
class BetaGammaPrior {
 public:
  BetaGammaPrior() = default;
  BetaGammaPrior(double a, double b, double c = 0.0, double d = 0.0);

  static BetaGammaPrior reference() { return {}; }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double c() const noexcept { return c_; }
  double d() const noexcept { return d_; }

  bool is_reference_limit() const noexcept { return c_ == 0.0 && d_ == 0.0; }
  std::size_t min_exceedances() const noexcept { return is_reference_limit() ? 3 : 1; }

  friend bool operator==(const BetaGammaPrior&, const BetaGammaPrior&) = default;

 private:
  double a_ = 1.0;
  double b_ = 1.0;
  double c_ = 0.0;
  double d_ = 0.0;
};

// Validated exceedances v_i >= 0 over a fixed threshold.
class ExceedanceSample {
 public:
  ExceedanceSample() = default;
  explicit ExceedanceSample(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double mean() const;

 private:
  std::vector<double> values_;
};

// Coordinates (logit xi, log sigma) in which all optimization, smoothing and
// MH ratios are carried out.
using Unconstrained = Point<2>;
Unconstrained to_unconstrained(const GpdParams& params);
GpdParams from_unconstrained(const Unconstrained& eta);

// l(sigma, xi) up to an additive constant.
double log_posterior(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                     const GpdParams& params);

// The same density expressed over (logit xi, log sigma): adds the Jacobian
// log xi + log(1 - xi) + log sigma. Returns -inf outside the open domain.
double log_posterior_unconstrained(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                                   const Unconstrained& eta);

// Log posterior over (lambda, xi) with lambda = sigma / (1 - xi), and its
// analytic partial derivative in lambda.
double log_posterior_lambda(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                            double xi, double lambda);
double lambda_score(const BetaGammaPrior& prior, const ExceedanceSample& sample, double xi,
                    double lambda);

struct MapOptions {
  std::optional<GpdParams> warm_start;
  double gradient_tol = 1e-8;
  double diameter_tol = 1e-10;
};

struct MapFit {
  GpdParams params{0.5, 1.0};
  double log_posterior = 0.0;
  // Optimum lies within 1e-4 of xi = 0 or xi = 1; the fit is a warning, not a failure.
  bool boundary = false;
  double gradient_norm = 0.0;
  int evaluations = 0;
};

// Posterior mode via multi-start Nelder-Mead in unconstrained coordinates,
// polished by Newton steps on the analytic gradient. Throws TooFewExceedances
// when the sample is too small for the prior to yield a proper posterior.
MapFit map_fit(const BetaGammaPrior& prior, const ExceedanceSample& sample,
               const MapOptions& options = {});

struct LaplaceFit {
  double lambda_hat = 0.0;
  // Marginal posterior variance of lambda: the lambda-lambda entry of the
  // inverse negative Hessian of log p(lambda, xi) at the mode.
  double variance = 0.0;
  // Curvature of the lambda profile at fixed xi-hat,
  // -lambda^2 / [n - c + 1 + (1/xi + 1) sum(q^2 - 2q)]. Ignores xi uncertainty.
  double conditional_variance = 0.0;
  std::vector<double> q_values;
  bool used_finite_difference = false;
  bool conditional_only = false;  // joint Hessian unusable; variance is the conditional one
};

// Gaussian approximation to the marginal posterior of lambda at the mode.
// When the closed-form profile bracket is not negative, a central difference
// (step 1e-4 lambda-hat) of the lambda profile is used instead. Throws
// DegenerateCurvature if that is not negative either.
LaplaceFit laplace_lambda(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                          const GpdParams& map);

// B refits of the posterior mode on samples of size n simulated from `map`.
// Replicate b draws from derive_seed(seed, b, attempt); failed refits are
// retried with a fresh attempt up to 10 times.
std::vector<GpdParams> parametric_bootstrap(const BetaGammaPrior& prior, const GpdParams& map,
                                            std::size_t n, std::size_t replicates,
                                            std::uint64_t seed, std::size_t threads = 1);

// Product-Gaussian kernel density over (logit xi, log sigma) with Scott's
// rule bandwidths.
class ProposalDensity {
 public:
  ProposalDensity(std::vector<Unconstrained> centers, Unconstrained bandwidths);

  double log_density(const Unconstrained& eta) const;
  double log_density(const GpdParams& params) const { return log_density(to_unconstrained(params)); }

  std::span<const Unconstrained> centers() const noexcept { return centers_; }
  // Draw from the kernel attached to center k, so that looping k over all
  // centers yields a sample from the smoothed density.
  GpdParams draw(std::size_t k, Rng& rng) const;
  const Unconstrained& bandwidths() const noexcept { return bandwidths_; }

 private:
  std::vector<Unconstrained> centers_;
  Unconstrained bandwidths_;
  double log_norm_;
};

ProposalDensity fit_proposal(std::span<const GpdParams> draws);

struct PosteriorDraws {
  std::vector<GpdParams> draws;
  double acceptance_rate = 0.0;
  double lambda_mean = 0.0;
  double lambda_variance = 0.0;
};

using LogDensityFn = std::function<double(const GpdParams&)>;

// Independence MH pass over precomputed proposals: the chain starts at
// proposals[0] and each later proposal is accepted with probability
// min{1, r(current) pi(proposal) / (r(proposal) pi(current))}. Both densities
// must be expressed over the same coordinates.
PosteriorDraws imh_correct(std::span<const GpdParams> proposals, const LogDensityFn& log_proposal,
                           const LogDensityFn& log_target, Rng& rng);

struct ImhOptions {
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct ImhResult {
  MapFit map;
  PosteriorDraws posterior;
};

// Bootstrap independence Metropolis-Hastings: MAP fit, parametric bootstrap,
// kernel-smoothed proposal, then the MH correction.
ImhResult imh_sample(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                     const ImhOptions& options = {});

// Moment-matched Beta prior on xi from a collection of tail-index estimates.
BetaGammaPrior fit_beta_prior(std::span<const double> xi_estimates);

// Initial-positive-sequence effective sample size of a scalar chain.
double effective_sample_size(std::span<const double> chain);

std::vector<double> lambda_values(std::span<const GpdParams> draws);

}  // namespace tailmean
