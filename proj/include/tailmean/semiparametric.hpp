#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tailmean/tail_posterior.hpp"

namespace tailmean {

// A sample partitioned at threshold u: bulk values z < u, and exceedances
// z - u for z >= u. Multiplicity is preserved.
class SplitSample {
 public:
  SplitSample() = default;
  SplitSample(std::vector<double> bulk, ExceedanceSample exceedances, double threshold);

  std::span<const double> bulk() const noexcept { return bulk_; }
  const ExceedanceSample& exceedances() const noexcept { return exceedances_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t m() const noexcept { return bulk_.size(); }
  std::size_t n() const noexcept { return exceedances_.size(); }
  std::size_t total() const noexcept { return m() + n(); }

 private:
  std::vector<double> bulk_;
  ExceedanceSample exceedances_;
  double threshold_ = 0.0;
};

SplitSample split_sample(std::span<const double> values, double threshold);

enum class TailMethod { Laplace, Imh, BulkOnly };
std::string_view to_string(TailMethod method);

struct MeanPosterior {
  double mean = 0.0;
  double variance = 0.0;
  double lambda_mean = 0.0;
  double lambda_variance = 0.0;
  TailMethod method = TailMethod::BulkOnly;

  double sd() const { return std::sqrt(variance); }
};

// Weight on var(lambda) in the posterior variance of the mean.
//  Dirichlet: n(n+1) / [N(N+1)], the exact second moment of the tail weight.
//  Published: 2n^2(N - 0.5) / [N^2(N+1)].
enum class LambdaVarianceWeight { Dirichlet, Published };

double lambda_variance_weight(std::size_t m, std::size_t n, LambdaVarianceWeight weight);

// Posterior mean and variance of the data-generating mean given tail moments
// E[lambda], var(lambda). With no exceedances the tail moments are ignored and
// the Bayesian-bootstrap result is returned. Throws EmptySample if m + n = 0.
MeanPosterior posterior_mean_moments(const SplitSample& split, double lambda_mean, double lambda_variance,
                                     TailMethod method = TailMethod::Laplace,
                                     LambdaVarianceWeight weight = LambdaVarianceWeight::Dirichlet);

// Unnormalized posterior weights: theta_i ~ Exp(1) on each bulk point and
// theta_tail ~ Gamma(n, 1) on the tail.
struct DirichletWeights {
  std::vector<double> theta;  // m bulk weights followed by the tail weight
  double total = 0.0;
};

DirichletWeights draw_dirichlet_weights(std::size_t m, std::size_t n, Rng& rng);

struct MonteCarloMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Direct simulation of mu = [sum theta_i z_i + theta_tail (u + lambda)] / |theta|,
// pairing replication r with lambda_draws[r mod size].
MonteCarloMoments mc_mean_oracle(const SplitSample& split, std::span<const double> lambda_draws,
                                 std::size_t replications, Rng& rng);

struct BootstrapReplicate {
  std::size_t m_b = 0;
  std::size_t n_b = 0;
  double lambda_hat = 0.0;
  double mu_hat = 0.0;
};

// Semiparametric frequentist bootstrap: binomial bulk/tail split, bulk
// resampled with replacement, tail simulated from the fitted GPD and refit.
std::vector<BootstrapReplicate> semiparametric_bootstrap(const SplitSample& split, const BetaGammaPrior& prior,
                                                         std::size_t replicates, std::uint64_t seed,
                                                         std::size_t threads = 1);

struct TreatmentEffect {
  double gamma = 0.0;
  double sd = 0.0;
};

TreatmentEffect treatment_effect(const MeanPosterior& treated, const MeanPosterior& control);

struct MeanAnalysisOptions {
  TailMethod method = TailMethod::Laplace;
  ImhOptions imh;
  LambdaVarianceWeight weight = LambdaVarianceWeight::Dirichlet;
};

struct MeanAnalysis {
  std::size_t m = 0;
  std::size_t n = 0;
  MapFit map;
  std::optional<double> acceptance_rate;
  MeanPosterior posterior;
};

// Split at u, fit the tail (Laplace or iMH), and combine into the posterior of
// the mean. Requires enough exceedances for the prior (TooFewExceedances).
MeanAnalysis analyze_mean(std::span<const double> values, double threshold, const BetaGammaPrior& prior,
                          const MeanAnalysisOptions& options = {});

}  // namespace tailmean
