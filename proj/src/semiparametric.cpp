#include "tailmean/semiparametric.hpp"

#include <numeric>
#include <string>

#include "tailmean/errors.hpp"
#include "tailmean/parallel.hpp"

namespace tailmean {

SplitSample::SplitSample(std::vector<double> bulk, ExceedanceSample exceedances, double threshold)
    : bulk_(std::move(bulk)), exceedances_(std::move(exceedances)), threshold_(threshold) {}

SplitSample split_sample(std::span<const double> values, double threshold) {
  std::vector<double> bulk;
  std::vector<double> tail;
  for (double z : values) {
    if (z < threshold) {
      bulk.push_back(z);
    } else {
      tail.push_back(z - threshold);
    }
  }
  return SplitSample(std::move(bulk), ExceedanceSample(std::move(tail)), threshold);
}

std::string_view to_string(TailMethod method) {
  switch (method) {
    case TailMethod::Laplace: return "laplace";
    case TailMethod::Imh: return "imh";
    case TailMethod::BulkOnly: return "bulk_only";
  }
  return "unknown";
}

double lambda_variance_weight(std::size_t m, std::size_t n, LambdaVarianceWeight weight) {
  const double nn = static_cast<double>(n);
  const double total = static_cast<double>(m + n);
  switch (weight) {
    case LambdaVarianceWeight::Dirichlet:
      return nn * (nn + 1.0) / (total * (total + 1.0));
    case LambdaVarianceWeight::Published:
      return 2.0 * nn * nn * (total - 0.5) / (total * total * (total + 1.0));
  }
  return 0.0;
}

MeanPosterior posterior_mean_moments(const SplitSample& split, double lambda_mean, double lambda_variance,
                                     TailMethod method, LambdaVarianceWeight weight) {
  const std::size_t m = split.m();
  const std::size_t n = split.n();
  if (m + n == 0) throw Error(ErrorKind::EmptySample, "cannot summarize an empty sample");

  const double total = static_cast<double>(m + n);
  const auto bulk = split.bulk();
  const double bulk_sum = std::accumulate(bulk.begin(), bulk.end(), 0.0);

  MeanPosterior out;
  if (n == 0) {
    out.method = TailMethod::BulkOnly;
    out.mean = bulk_sum / total;
    double ss = 0.0;
    for (double z : bulk) ss += (z - out.mean) * (z - out.mean);
    out.variance = ss / (total * (total + 1.0));
    return out;
  }
  if (!(lambda_variance >= 0.0) || !std::isfinite(lambda_mean)) {
    throw Error(ErrorKind::Domain, "tail moments must be finite with nonnegative variance");
  }

  const double nn = static_cast<double>(n);
  const double tail_point = split.threshold() + lambda_mean;
  out.method = method;
  out.lambda_mean = lambda_mean;
  out.lambda_variance = lambda_variance;
  out.mean = (bulk_sum + nn * tail_point) / total;
  double ss = 0.0;
  for (double z : bulk) ss += (z - out.mean) * (z - out.mean);
  ss += nn * (tail_point - out.mean) * (tail_point - out.mean);
  out.variance = ss / (total * (total + 1.0)) + lambda_variance_weight(m, n, weight) * lambda_variance;
  return out;
}

DirichletWeights draw_dirichlet_weights(std::size_t m, std::size_t n, Rng& rng) {
  DirichletWeights w;
  w.theta.reserve(m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    w.theta.push_back(rng.exponential(1.0));
    w.total += w.theta.back();
  }
  w.theta.push_back(n > 0 ? rng.gamma(static_cast<double>(n)) : 0.0);
  w.total += w.theta.back();
  return w;
}

MonteCarloMoments mc_mean_oracle(const SplitSample& split, std::span<const double> lambda_draws,
                                 std::size_t replications, Rng& rng) {
  if (lambda_draws.empty() || split.n() == 0) {
    throw Error(ErrorKind::Domain, "Monte Carlo oracle needs exceedances and lambda draws");
  }
  const auto bulk = split.bulk();
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < replications; ++r) {
    const DirichletWeights w = draw_dirichlet_weights(split.m(), split.n(), rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < bulk.size(); ++i) acc += w.theta[i] * bulk[i];
    acc += w.theta.back() * (split.threshold() + lambda_draws[r % lambda_draws.size()]);
    const double mu = acc / w.total;
    // Welford update
    const double delta = mu - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (mu - mean);
  }
  return {mean, replications > 1 ? m2 / static_cast<double>(replications - 1) : 0.0};
}

std::vector<BootstrapReplicate> semiparametric_bootstrap(const SplitSample& split, const BetaGammaPrior& prior,
                                                         std::size_t replicates, std::uint64_t seed,
                                                         std::size_t threads) {
  if (split.n() < 3) throw Error(ErrorKind::TooFewExceedances, "semiparametric bootstrap needs n >= 3");
  if (replicates < 100) throw Error(ErrorKind::Domain, "semiparametric bootstrap needs at least 100 replicates");

  const MapFit fit = map_fit(prior, split.exceedances());
  const std::size_t total = split.total();
  const double p_bulk = static_cast<double>(split.m()) / static_cast<double>(total);
  const auto bulk = split.bulk();
  const double u = split.threshold();

  std::vector<BootstrapReplicate> out(replicates);
  MapOptions options;
  options.warm_start = fit.params;
  parallel_for(replicates, threads, [&](std::size_t b) {
    for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
      Rng rng(derive_seed(seed, b, attempt));
      BootstrapReplicate rep;
      rep.m_b = bulk.empty() ? 0 : static_cast<std::size_t>(rng.binomial(total, p_bulk));
      rep.n_b = total - rep.m_b;
      double bulk_sum = 0.0;
      for (std::size_t i = 0; i < rep.m_b; ++i) bulk_sum += bulk[rng.below(bulk.size())];
      try {
        const ExceedanceSample tail(gpd_sample(fit.params, rep.n_b, rng));
        rep.lambda_hat = gpd_mean(map_fit(prior, tail, options).params);
      } catch (const Error&) {
        continue;
      }
      rep.mu_hat = (bulk_sum + static_cast<double>(rep.n_b) * (u + rep.lambda_hat)) / static_cast<double>(total);
      out[b] = rep;
      return;
    }
    throw Error(ErrorKind::BootstrapFailure,
                "semiparametric replicate " + std::to_string(b) + " failed after 10 attempts");
  });
  return out;
}

TreatmentEffect treatment_effect(const MeanPosterior& treated, const MeanPosterior& control) {
  return {treated.mean - control.mean, std::sqrt(treated.variance + control.variance)};
}

MeanAnalysis analyze_mean(std::span<const double> values, double threshold, const BetaGammaPrior& prior,
                          const MeanAnalysisOptions& options) {
  const SplitSample split = split_sample(values, threshold);
  if (split.n() < prior.min_exceedances()) {
    throw Error(ErrorKind::TooFewExceedances,
                "threshold " + std::to_string(threshold) + " leaves " + std::to_string(split.n()) +
                    " exceedances; need at least " + std::to_string(prior.min_exceedances()));
  }

  MeanAnalysis out;
  out.m = split.m();
  out.n = split.n();
  double lambda_mean = 0.0;
  double lambda_variance = 0.0;
  if (options.method == TailMethod::Imh) {
    const ImhResult imh = imh_sample(prior, split.exceedances(), options.imh);
    out.map = imh.map;
    out.acceptance_rate = imh.posterior.acceptance_rate;
    lambda_mean = imh.posterior.lambda_mean;
    lambda_variance = imh.posterior.lambda_variance;
  } else {
    out.map = map_fit(prior, split.exceedances());
    const LaplaceFit laplace = laplace_lambda(prior, split.exceedances(), out.map.params);
    lambda_mean = laplace.lambda_hat;
    lambda_variance = laplace.variance;
  }
  out.posterior = posterior_mean_moments(split, lambda_mean, lambda_variance, options.method, options.weight);
  return out;
}

}  // namespace tailmean
