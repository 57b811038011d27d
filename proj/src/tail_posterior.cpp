#include "tailmean/tail_posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "tailmean/errors.hpp"
#include "tailmean/parallel.hpp"

namespace tailmean {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// |logit xi| beyond this is outside the search box (xi within ~1.5e-8 of an end).
constexpr double kLogitBound = 18.0;
constexpr double kBoundaryXi = 1e-4;
constexpr int kMaxBootstrapAttempts = 10;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Sums {
  double log_terms = 0.0;  // sum log1p(t_i)
  double ratio = 0.0;      // sum t_i / (1 + t_i)
  double curv = 0.0;       // sum t_i / (1 + t_i)^2
};

// Neumaier-compensated running sum; the gradient must resolve 1e-8 on
// samples of 10^5 and more.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

Sums sums(std::span<const double> values, double xi, double sigma) {
  CompensatedSum log_terms, ratio, curv;
  const double k = xi / sigma;
  for (double v : values) {
    const double t = k * v;
    const double inv = 1.0 / (1.0 + t);
    log_terms.add(std::log1p(t));
    ratio.add(t * inv);
    curv.add(t * inv * inv);
  }
  return {log_terms.value(), ratio.value(), curv.value()};
}

double log_posterior_raw(const BetaGammaPrior& prior, std::span<const double> values, double xi,
                         double sigma) {
  const double k = xi / sigma;
  CompensatedSum acc;
  for (double v : values) acc.add(std::log1p(k * v));
  const double n = static_cast<double>(values.size());
  double out = -(1.0 + xi) / xi * acc.value() + (prior.c() - n - 1.0) * std::log(sigma) - prior.d() * sigma;
  if (prior.a() != 1.0) out += (prior.a() - 1.0) * std::log(xi);
  if (prior.b() != 1.0) out += (prior.b() - 1.0) * std::log1p(-xi);
  return out;
}

double objective_unconstrained(const BetaGammaPrior& prior, std::span<const double> values,
                               const Unconstrained& eta) {
  if (!(std::abs(eta[0]) <= kLogitBound) || !std::isfinite(eta[1])) return kNegInf;
  const double sigma = std::exp(eta[1]);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) return kNegInf;
  return log_posterior_raw(prior, values, logistic(eta[0]), sigma);
}

struct Derivatives {
  Point<2> gradient{};
  std::array<double, 3> hessian{};  // h11, h12, h22
};

// Gradient and Hessian of l in (logit xi, log sigma).
Derivatives derivatives(const BetaGammaPrior& prior, std::span<const double> values,
                        const Unconstrained& eta) {
  const double xi = logistic(eta[0]);
  const double one_minus = logistic(-eta[0]);
  const double sigma = std::exp(eta[1]);
  const double n = static_cast<double>(values.size());
  const Sums s = sums(values, xi, sigma);
  const double ratio_a = one_minus / xi;
  const double core = s.log_terms - (1.0 + xi) * s.ratio;
  const double a1 = prior.a() - 1.0;
  const double b1 = prior.b() - 1.0;

  Derivatives out;
  out.gradient[0] = ratio_a * core + a1 * one_minus - b1 * xi;
  out.gradient[1] = (1.0 / xi + 1.0) * s.ratio + (prior.c() - n - 1.0) - prior.d() * sigma;
  out.hessian[0] = -ratio_a * core +
                   ratio_a * (one_minus * one_minus * s.ratio - (1.0 + xi) * one_minus * s.curv) -
                   (a1 + b1) * xi * one_minus;
  out.hessian[1] = ratio_a * (-s.ratio + (1.0 + xi) * s.curv);
  out.hessian[2] = -(1.0 / xi + 1.0) * s.curv - prior.d() * sigma;
  return out;
}

double norm2(const Point<2>& p) { return std::hypot(p[0], p[1]); }

struct Polished {
  Unconstrained eta;
  double value;
  double gradient_norm;
  int evaluations;
  bool ok;
};

// Damped Newton ascent; fails if the Hessian is not negative definite.
Polished newton_polish(const BetaGammaPrior& prior, std::span<const double> values,
                       Unconstrained eta, double value, double gradient_tol, double step_tol) {
  int evals = 0;
  for (int iter = 0; iter < 100; ++iter) {
    const Derivatives der = derivatives(prior, values, eta);
    ++evals;
    const double gnorm = norm2(der.gradient);
    if (gnorm < gradient_tol) return {eta, value, gnorm, evals, true};
    const auto [h11, h12, h22] = der.hessian;
    const double det = h11 * h22 - h12 * h12;
    if (!(h11 < 0.0 && det > 0.0)) return {eta, value, gnorm, evals, false};
    const Point<2> step{-(h22 * der.gradient[0] - h12 * der.gradient[1]) / det,
                        -(-h12 * der.gradient[0] + h11 * der.gradient[1]) / det};
    // Near the mode the per-step gain drops below the rounding of l itself.
    const double noise = 1e-13 * (std::abs(value) + static_cast<double>(values.size()));
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Unconstrained trial{eta[0] + t * step[0], eta[1] + t * step[1]};
      const double v = objective_unconstrained(prior, values, trial);
      ++evals;
      if (v >= value - noise) {
        eta = trial;
        value = v;
        moved = true;
        break;
      }
    }
    if (!moved || t * norm2(step) < step_tol) {
      const double g = norm2(derivatives(prior, values, eta).gradient);
      return {eta, value, g, evals + 1, moved || g < 1e3 * gradient_tol};
    }
  }
  const double g = norm2(derivatives(prior, values, eta).gradient);
  return {eta, value, g, evals + 1, g < gradient_tol};
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

BetaGammaPrior::BetaGammaPrior(double a, double b, double c, double d) : a_(a), b_(b), c_(c), d_(d) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorKind::Domain, "Beta prior shapes must be positive");
  }
  if (!(c >= 0.0) || !(d >= 0.0) || !std::isfinite(c) || !std::isfinite(d)) {
    throw Error(ErrorKind::Domain, "Gamma prior shape and rate must be nonnegative");
  }
}

ExceedanceSample::ExceedanceSample(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::Domain, "exceedances must be finite and nonnegative");
    }
  }
}

double ExceedanceSample::mean() const {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

Unconstrained to_unconstrained(const GpdParams& params) {
  return {std::log(params.xi()) - std::log1p(-params.xi()), std::log(params.sigma())};
}

GpdParams from_unconstrained(const Unconstrained& eta) {
  return GpdParams(logistic(eta[0]), std::exp(eta[1]));
}

double log_posterior(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                     const GpdParams& params) {
  return log_posterior_raw(prior, sample.values(), params.xi(), params.sigma());
}

double log_posterior_unconstrained(const BetaGammaPrior& prior, const ExceedanceSample& sample,
                                   const Unconstrained& eta) {
  const double l = objective_unconstrained(prior, sample.values(), eta);
  if (l == kNegInf) return kNegInf;
  const double xi = logistic(eta[0]);
  return l + std::log(xi) + std::log(logistic(-eta[0])) + eta[1];
}

double log_posterior_lambda(const BetaGammaPrior& prior, const ExceedanceSample& sample, double xi,
                            double lambda) {
  return log_posterior_raw(prior, sample.values(), xi, lambda * (1.0 - xi)) + std::log1p(-xi);
}

double lambda_score(const BetaGammaPrior& prior, const ExceedanceSample& sample, double xi,
                    double lambda) {
  double sum_q = 0.0;
  for (double v : sample.values()) sum_q += xi * v / ((1.0 - xi) * lambda + xi * v);
  const double n = static_cast<double>(sample.size());
  return ((1.0 / xi + 1.0) * sum_q - n + prior.c() - 1.0) / lambda - prior.d() * (1.0 - xi);
}

MapFit map_fit(const BetaGammaPrior& prior, const ExceedanceSample& sample, const MapOptions& options) {
  const auto values = sample.values();
  if (sample.size() < prior.min_exceedances()) {
    throw Error(ErrorKind::TooFewExceedances,
                "need at least " + std::to_string(prior.min_exceedances()) + " exceedances, got " +
                    std::to_string(sample.size()));
  }
  const double vmax = *std::max_element(values.begin(), values.end());
  if (!(vmax > 0.0) && prior.is_reference_limit()) {
    throw Error(ErrorKind::TooFewExceedances, "all exceedances are zero; posterior is improper");
  }

  const double vbar = sample.mean();
  const double s2 = sample_variance(values);
  const bool proper_scale = prior.c() > 0.0 && prior.d() > 0.0;
  const double fallback_sigma = proper_scale ? prior.c() / prior.d() : std::max(vmax, 1.0);

  std::vector<Unconstrained> starts;
  {
    double xi0 = 0.95;
    double sigma0 = fallback_sigma;
    if (vbar > 0.0 && s2 > 0.0) {
      const double r = vbar * vbar / s2;
      xi0 = std::clamp(0.5 * (1.0 - r), 0.05, 0.95);
      sigma0 = 0.5 * vbar * (r + 1.0);
    }
    starts.push_back(to_unconstrained(GpdParams(xi0, sigma0)));
  }
  {
    const double xi_p = std::clamp(prior.a() / (prior.a() + prior.b()), 1e-3, 1.0 - 1e-3);
    const double sigma_p = proper_scale ? prior.c() / prior.d() : (vbar > 0.0 ? vbar * (1.0 - xi_p) : fallback_sigma);
    starts.push_back(to_unconstrained(GpdParams(xi_p, sigma_p)));
  }
  if (options.warm_start) starts.push_back(to_unconstrained(*options.warm_start));

  auto objective = [&](const Unconstrained& eta) { return objective_unconstrained(prior, values, eta); };

  int evals = 0;
  NelderMeadResult<2> best;
  for (const auto& start : starts) {
    NelderMeadOptions nm;
    nm.diameter_tol = 1e-2;
    nm.max_evaluations = 2000;
    const auto res = nelder_mead_maximize<2>(objective, start, nm);
    evals += res.evaluations;
    if (res.value > best.value) best = res;
  }
  if (!std::isfinite(best.value)) {
    throw Error(ErrorKind::Domain, "log posterior is not finite at any start");
  }

  Unconstrained eta = best.x;
  double value = best.value;
  double gnorm = norm2(derivatives(prior, values, eta).gradient);
  const bool near_boundary = std::abs(eta[0]) > -std::log(kBoundaryXi);
  bool polished = false;
  if (!near_boundary) {
    const auto pol = newton_polish(prior, values, eta, value, options.gradient_tol, options.diameter_tol);
    evals += pol.evaluations;
    if (pol.ok) {
      eta = pol.eta;
      value = pol.value;
      gnorm = pol.gradient_norm;
      polished = true;
    }
  }
  if (!polished) {
    NelderMeadOptions nm;
    nm.initial_step = 1e-2;
    nm.diameter_tol = options.diameter_tol;
    nm.max_evaluations = 4000;
    const auto res = nelder_mead_maximize<2>(objective, eta, nm);
    evals += res.evaluations;
    if (res.value >= value) {
      eta = res.x;
      value = res.value;
    }
    gnorm = norm2(derivatives(prior, values, eta).gradient);
  }

  const double xi = logistic(eta[0]);
  MapFit out;
  out.params = GpdParams(xi, std::exp(eta[1]));
  out.log_posterior = value;
  out.boundary = xi < kBoundaryXi || xi > 1.0 - kBoundaryXi;
  out.gradient_norm = gnorm;
  out.evaluations = evals;
  return out;
}

LaplaceFit laplace_lambda(const BetaGammaPrior& prior, const ExceedanceSample& sample, const GpdParams& map) {
  const double xi = map.xi();
  const double lambda = gpd_mean(map);
  LaplaceFit fit;
  fit.lambda_hat = lambda;
  fit.q_values.reserve(sample.size());
  // With t = xi v / ((1 - xi) lambda): q = t / (1 + t), w = t / (1 + t)^2.
  CompensatedSum log_sum, q_sum, w_sum;
  for (double v : sample.values()) {
    const double t = xi * v / ((1.0 - xi) * lambda);
    const double q = xi * v / ((1.0 - xi) * lambda + xi * v);
    fit.q_values.push_back(q);
    log_sum.add(std::log1p(t));
    q_sum.add(q);
    w_sum.add(q * (1.0 - q));
  }
  const double n = static_cast<double>(sample.size());
  const double L = log_sum.value(), R = q_sum.value(), W = w_sum.value();
  const double bracket = n - prior.c() + 1.0 - (1.0 / xi + 1.0) * (R + W);
  if (bracket < 0.0) {
    fit.conditional_variance = -lambda * lambda / bracket;
    // Hessian of log p(lambda, xi) at the mode; the marginal variance of
    // lambda is the lambda-lambda entry of its negated inverse.
    const double g = 1.0 / (xi * (1.0 - xi));
    const double dg = -(1.0 - 2.0 * xi) * g * g;
    const double A = -(1.0 + xi) / xi;
    const double f_ll = bracket / (lambda * lambda);
    const double f_lx = -R / (xi * xi * lambda) - A * W * g / lambda + prior.d();
    const double f_xx = -2.0 / (xi * xi * xi) * L + 2.0 / (xi * xi) * R * g + A * (W * g * g + R * dg) -
                        (prior.a() - 1.0) / (xi * xi) + (n - prior.b() - prior.c() + 1.0) / ((1.0 - xi) * (1.0 - xi));
    const double det = f_ll * f_xx - f_lx * f_lx;
    if (f_xx < 0.0 && det > 0.0 && std::isfinite(det)) {
      fit.variance = -f_xx / det;
    } else {
      fit.variance = fit.conditional_variance;
      fit.conditional_only = true;
    }
    return fit;
  }

  // Central difference of the lambda profile at fixed xi.
  const double h = 1e-4 * lambda;
  const double f0 = log_posterior_lambda(prior, sample, xi, lambda);
  const double fp = log_posterior_lambda(prior, sample, xi, lambda + h);
  const double fm = log_posterior_lambda(prior, sample, xi, lambda - h);
  const double second = (fp - 2.0 * f0 + fm) / (h * h);
  if (second < 0.0 && std::isfinite(second)) {
    fit.conditional_variance = -1.0 / second;
    fit.variance = fit.conditional_variance;
    fit.used_finite_difference = true;
    fit.conditional_only = true;
    return fit;
  }
  throw Error(ErrorKind::DegenerateCurvature,
              "log posterior is not concave in lambda at the mode (curvature bracket " +
                  std::to_string(bracket) + ")");
}

std::vector<GpdParams> parametric_bootstrap(const BetaGammaPrior& prior, const GpdParams& map, std::size_t n,
                                            std::size_t replicates, std::uint64_t seed, std::size_t threads) {
  if (replicates < 2) throw Error(ErrorKind::Domain, "parametric bootstrap needs at least 2 replicates");
  if (n < 3) throw Error(ErrorKind::Domain, "parametric bootstrap needs samples of at least 3");

  std::vector<std::optional<GpdParams>> out(replicates);
  MapOptions options;
  options.warm_start = map;
  parallel_for(replicates, threads, [&](std::size_t b) {
    for (int attempt = 0; attempt < kMaxBootstrapAttempts; ++attempt) {
      Rng rng(derive_seed(seed, b, static_cast<std::uint64_t>(attempt)));
      try {
        out[b] = map_fit(prior, ExceedanceSample(gpd_sample(map, n, rng)), options).params;
        return;
      } catch (const Error&) {
      }
    }
    throw Error(ErrorKind::BootstrapFailure,
                "bootstrap replicate " + std::to_string(b) + " failed after 10 attempts");
  });

  std::vector<GpdParams> params;
  params.reserve(replicates);
  for (auto& p : out) params.push_back(*p);
  return params;
}

ProposalDensity::ProposalDensity(std::vector<Unconstrained> centers, Unconstrained bandwidths)
    : centers_(std::move(centers)), bandwidths_(bandwidths) {
  if (centers_.empty()) throw Error(ErrorKind::Domain, "kernel density needs at least one center");
  if (!(bandwidths_[0] > 0.0) || !(bandwidths_[1] > 0.0)) {
    throw Error(ErrorKind::ZeroVariance, "kernel bandwidths must be positive");
  }
  log_norm_ = -std::log(static_cast<double>(centers_.size())) - std::log(bandwidths_[0]) -
              std::log(bandwidths_[1]) - std::log(2.0 * std::numbers::pi);
}

double ProposalDensity::log_density(const Unconstrained& eta) const {
  double top = kNegInf;
  thread_local std::vector<double> exps;
  exps.resize(centers_.size());
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    const double z0 = (eta[0] - centers_[k][0]) / bandwidths_[0];
    const double z1 = (eta[1] - centers_[k][1]) / bandwidths_[1];
    exps[k] = -0.5 * (z0 * z0 + z1 * z1);
    top = std::max(top, exps[k]);
  }
  if (top == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double e : exps) acc += std::exp(e - top);
  return log_norm_ + top + std::log(acc);
}

GpdParams ProposalDensity::draw(std::size_t k, Rng& rng) const {
  const Unconstrained& c = centers_.at(k);
  const double z0 = rng.normal();
  const double z1 = rng.normal();
  return from_unconstrained({c[0] + bandwidths_[0] * z0, c[1] + bandwidths_[1] * z1});
}

ProposalDensity fit_proposal(std::span<const GpdParams> draws) {
  if (draws.size() < 2) throw Error(ErrorKind::Domain, "kernel smoothing needs at least 2 draws");
  std::vector<Unconstrained> centers;
  centers.reserve(draws.size());
  std::vector<double> dim0, dim1;
  for (const auto& d : draws) {
    centers.push_back(to_unconstrained(d));
    dim0.push_back(centers.back()[0]);
    dim1.push_back(centers.back()[1]);
  }
  const double scott = std::pow(static_cast<double>(draws.size()), -1.0 / 6.0);
  const Unconstrained h{std::sqrt(sample_variance(dim0)) * scott, std::sqrt(sample_variance(dim1)) * scott};
  if (!(h[0] > 0.0) || !(h[1] > 0.0)) {
    throw Error(ErrorKind::ZeroVariance, "bootstrap draws have zero spread in a coordinate");
  }
  return ProposalDensity(std::move(centers), h);
}

std::vector<double> lambda_values(std::span<const GpdParams> draws) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(gpd_mean(d));
  return out;
}

PosteriorDraws imh_correct(std::span<const GpdParams> proposals, const LogDensityFn& log_proposal,
                           const LogDensityFn& log_target, Rng& rng) {
  if (proposals.empty()) throw Error(ErrorKind::Domain, "no proposals to correct");
  PosteriorDraws out;
  out.draws.reserve(proposals.size());
  GpdParams current = proposals[0];
  double cur_r = log_proposal(current);
  double cur_t = log_target(current);
  out.draws.push_back(current);
  std::size_t accepted = 0;
  for (std::size_t b = 1; b < proposals.size(); ++b) {
    const GpdParams& prop = proposals[b];
    const double prop_r = log_proposal(prop);
    const double prop_t = log_target(prop);
    const double log_ratio = (cur_r + prop_t) - (prop_r + cur_t);
    const double u = rng.uniform();
    if (log_ratio >= 0.0 || (std::isfinite(prop_t) && std::log(u) < log_ratio)) {
      current = prop;
      cur_r = prop_r;
      cur_t = prop_t;
      ++accepted;
    }
    out.draws.push_back(current);
  }
  out.acceptance_rate =
      proposals.size() > 1 ? static_cast<double>(accepted) / static_cast<double>(proposals.size() - 1) : 1.0;
  const auto lambdas = lambda_values(out.draws);
  out.lambda_mean = std::accumulate(lambdas.begin(), lambdas.end(), 0.0) / static_cast<double>(lambdas.size());
  out.lambda_variance = sample_variance(lambdas);
  return out;
}

ImhResult imh_sample(const BetaGammaPrior& prior, const ExceedanceSample& sample, const ImhOptions& options) {
  if (options.draws < 100) throw Error(ErrorKind::Domain, "iMH needs at least 100 draws");
  ImhResult out;
  out.map = map_fit(prior, sample);
  const auto replicates = parametric_bootstrap(prior, out.map.params, sample.size(), options.draws,
                                               derive_seed(options.seed, 0, 1), options.threads);
  const ProposalDensity proposal = fit_proposal(replicates);
  // The MH ratio uses the smoothed density, so candidates must come from it
  // too. Feeding the raw replicates would target posterior * g / r.
  Rng jitter(derive_seed(options.seed, 0, 3));
  std::vector<GpdParams> proposals;
  proposals.reserve(replicates.size());
  for (std::size_t k = 0; k < replicates.size(); ++k) proposals.push_back(proposal.draw(k, jitter));
  Rng rng(derive_seed(options.seed, 0, 2));
  out.posterior = imh_correct(
      proposals, [&](const GpdParams& p) { return proposal.log_density(p); },
      [&](const GpdParams& p) { return log_posterior_unconstrained(prior, sample, to_unconstrained(p)); }, rng);
  return out;
}

BetaGammaPrior fit_beta_prior(std::span<const double> xi_estimates) {
  if (xi_estimates.size() < 2) throw Error(ErrorKind::Domain, "need at least 2 tail-index estimates");
  for (double x : xi_estimates) {
    if (!(x > 0.0 && x < 1.0)) throw Error(ErrorKind::Domain, "tail-index estimates must lie in (0, 1)");
  }
  const double mean = std::accumulate(xi_estimates.begin(), xi_estimates.end(), 0.0) /
                      static_cast<double>(xi_estimates.size());
  const double var = sample_variance(xi_estimates);
  const double bound = mean * (1.0 - mean);
  if (!(var > 0.0) || var >= bound) {
    throw Error(ErrorKind::DegenerateMoments, "estimate variance " + std::to_string(var) +
                                                  " is incompatible with a Beta of mean " + std::to_string(mean));
  }
  const double k = bound / var - 1.0;
  return BetaGammaPrior(mean * k, (1.0 - mean) * k, 0.0, 0.0);
}

double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (chain[i] - mean) * (chain[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0)) return static_cast<double>(n);
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / gamma0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(n) / std::max(tau, 1e-12);
}

}  // namespace tailmean
