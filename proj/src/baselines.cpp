#include "tailmean/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tailmean/errors.hpp"
#include "tailmean/parallel.hpp"

namespace tailmean {
namespace {

EstimateWithSe mean_and_se(std::span<const double> values, BaselineMethod method) {
  if (values.size() < 2) throw Error(ErrorKind::EmptySample, "need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double z : values) ss += (z - mean) * (z - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n), method};
}

}  // namespace

std::string_view to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::Naive: return "naive";
    case BaselineMethod::Winsorized: return "winsorized";
    case BaselineMethod::Subsampling: return "subsampling";
  }
  return "unknown";
}

EstimateWithSe naive_mean(std::span<const double> values) { return mean_and_se(values, BaselineMethod::Naive); }

EstimateWithSe winsorized_mean(std::span<const double> values, double threshold) {
  std::vector<double> clipped(values.begin(), values.end());
  for (double& z : clipped) z = std::min(z, threshold);
  return mean_and_se(clipped, BaselineMethod::Winsorized);
}

SubsamplingEstimate subsampling_se(std::span<const double> values, const SubsamplingOptions& options) {
  if (values.size() < 10) throw Error(ErrorKind::EmptySample, "subsampling needs at least 10 values");
  if (options.num_subsamples < 50) throw Error(ErrorKind::Domain, "subsampling needs at least 50 subsamples");

  SubsamplingEstimate out;
  out.result = naive_mean(values);
  out.result.method = BaselineMethod::Subsampling;

  try {
    double u = 0.0;
    if (options.threshold) {
      u = *options.threshold;
    } else {
      const std::vector<double> grid = make_threshold_grid(values, default_grid_levels());
      const auto diags = threshold_scan(values, grid, BetaGammaPrior::reference());
      u = select_threshold(diags, options.rule).u;
    }
    out.threshold = u;
    std::vector<double> tail;
    for (double z : values) {
      if (z >= u) tail.push_back(z - u);
    }
    const MapFit fit = map_fit(BetaGammaPrior::reference(), ExceedanceSample(std::move(tail)));
    if (fit.boundary) throw Error(ErrorKind::Domain, "tail index fit at the boundary");
    out.xi_hat = fit.params.xi();
    out.beta = std::min(0.5, 1.0 - fit.params.xi());
  } catch (const Error&) {
    out.rate_fallback = true;
    out.beta = 0.5;
  }

  const std::size_t total = values.size();
  const std::size_t b = total / 2;
  out.subsample_size = b;
  std::vector<double> means(options.num_subsamples);
  parallel_for(options.num_subsamples, options.threads, [&](std::size_t s) {
    Rng rng(derive_seed(options.seed, s, 7));
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    double acc = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
      std::swap(idx[i], idx[j]);
      acc += values[idx[i]];
    }
    means[s] = acc / static_cast<double>(b);
  });

  const double mbar = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
  double ss = 0.0;
  for (double mu : means) ss += (mu - mbar) * (mu - mbar);
  const double sd_b = std::sqrt(ss / static_cast<double>(means.size() - 1));
  const double frac = static_cast<double>(b) / static_cast<double>(total);
  out.result.se = sd_b * std::pow(frac, out.beta) / std::sqrt(1.0 - frac);
  return out;
}

}  // namespace tailmean
