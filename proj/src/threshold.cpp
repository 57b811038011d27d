#include "tailmean/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tailmean/errors.hpp"
#include "tailmean/parallel.hpp"

namespace tailmean {

std::vector<ThresholdDiagnostic> threshold_scan(std::span<const double> values, std::span<const double> grid,
                                                const BetaGammaPrior& prior, std::size_t threads) {
  if (grid.empty()) throw Error(ErrorKind::EmptyGrid, "threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
      throw Error(ErrorKind::Domain, "threshold grid must be positive and strictly increasing");
    }
  }

  std::vector<ThresholdDiagnostic> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const double u = grid[i];
    ThresholdDiagnostic& diag = out[i];
    diag.u = u;
    std::vector<double> tail;
    for (double z : values) {
      if (z >= u) tail.push_back(z - u);
    }
    diag.n = tail.size();
    if (diag.n < std::max<std::size_t>(3, prior.min_exceedances())) return;
    try {
      const MapFit fit = map_fit(prior, ExceedanceSample(std::move(tail)), {});
      TailFitSummary s;
      s.xi_hat = fit.params.xi();
      s.sigma_hat = fit.params.sigma();
      s.ratio = s.sigma_hat / (s.xi_hat * u);
      s.boundary = fit.boundary;
      diag.fit = s;
      diag.q_n = johansson_variance(s.xi_hat, s.sigma_hat);
    } catch (const Error&) {
    }
  });
  return out;
}

ThresholdChoice select_threshold(std::span<const ThresholdDiagnostic> diagnostics, const SelectionRule& rule) {
  std::vector<std::size_t> valid, interior;
  for (std::size_t i = 0; i < diagnostics.size(); ++i) {
    if (!diagnostics[i].valid()) continue;
    valid.push_back(i);
    if (!diagnostics[i].fit->boundary) interior.push_back(i);
  }
  // A fit pinned at the edge of the xi range says little about the ratio.
  if (interior.size() >= 2) valid = std::move(interior);
  if (valid.size() < 2) {
    throw Error(ErrorKind::NoValidDiagnostics, "threshold selection needs at least two successful tail fits");
  }

  for (std::size_t k = 0; k + 1 < valid.size(); ++k) {
    const double ratio = diagnostics[valid[k]].fit->ratio;
    const double next = diagnostics[valid[k + 1]].fit->ratio;
    if (std::abs(ratio - 1.0) <= rule.near_one_tol && next > ratio) {
      return {diagnostics[valid[k]].u, valid[k], false};
    }
  }

  std::size_t best = valid.front();
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i : valid) {
    const double gap = std::abs(diagnostics[i].fit->ratio - 1.0);
    if (gap < best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return {diagnostics[best].u, best, true};
}

double johansson_variance(double xi_hat, double sigma_hat) {
  const double one_minus = 1.0 - xi_hat;
  return sigma_hat * sigma_hat * (1.0 + xi_hat) * (1.0 - xi_hat + 2.0 * xi_hat * xi_hat) /
         (one_minus * one_minus * one_minus * one_minus);
}

std::vector<double> quantile_grid(std::span<const double> values, std::span<const double> levels) {
  if (values.empty()) throw Error(ErrorKind::EmptySample, "cannot take quantiles of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(levels.size());
  for (double p : levels) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Domain, "quantile level outside [0, 1]");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    out.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
  }
  return out;
}

std::vector<double> make_threshold_grid(std::span<const double> values, std::span<const double> levels) {
  std::vector<double> positive;
  for (double z : values) {
    if (z > 0.0) positive.push_back(z);
  }
  std::vector<double> grid = quantile_grid(positive, levels);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<double> default_grid_levels() {
  constexpr int kLevels = 13;
  std::vector<double> levels;
  levels.reserve(kLevels);
  for (int k = 0; k < kLevels; ++k) {
    levels.push_back(1.0 - 0.1 * std::pow(0.01, static_cast<double>(k) / (kLevels - 1)));
  }
  return levels;
}

}  // namespace tailmean
