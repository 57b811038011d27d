#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tailmean/tail_posterior.hpp"

namespace tailmean {

struct TailFitSummary {
  double xi_hat = 0.0;
  double sigma_hat = 0.0;
  double ratio = 0.0;  // sigma_hat / (xi_hat * u)
  bool boundary = false;
};

struct ThresholdDiagnostic {
  double u = 0.0;
  std::size_t n = 0;
  std::optional<TailFitSummary> fit;  // absent when too few exceedances or the fit failed
  std::optional<double> q_n;          // asymptotic variance of lambda-hat, times n

  bool valid() const noexcept { return fit.has_value(); }
};

// Fits the tail at each grid threshold. Grid points whose fit fails carry an
// absent fit rather than aborting. Throws EmptyGrid on an empty grid and
// Domain if the grid is not strictly increasing and positive.
std::vector<ThresholdDiagnostic> threshold_scan(std::span<const double> values, std::span<const double> grid,
                                                const BetaGammaPrior& prior, std::size_t threads = 1);

struct SelectionRule {
  double near_one_tol = 0.15;
};

struct ThresholdChoice {
  double u = 0.0;
  std::size_t index = 0;  // position in the scanned grid
  bool low_confidence = false;
};

// Smallest u whose ratio is within tol of one and increasing to the next
// valid grid point; otherwise the u minimizing |ratio - 1|, flagged low
// confidence. Boundary fits are ignored when at least two interior fits
// exist. Throws NoValidDiagnostics with fewer than two valid entries.
ThresholdChoice select_threshold(std::span<const ThresholdDiagnostic> diagnostics, const SelectionRule& rule = {});

// q_n = sigma^2 (1 + xi)(1 - xi + 2 xi^2) / (1 - xi)^4, the delta-method
// variance of the mode-based lambda-hat times n; sqrt(q_n / n) is its
// standard error.
double johansson_variance(double xi_hat, double sigma_hat);

// Empirical quantile (type 7) of the data at each level.
std::vector<double> quantile_grid(std::span<const double> values, std::span<const double> levels);

// Thresholds at the given quantile levels of the positive values, with
// duplicates dropped so the result is strictly increasing.
std::vector<double> make_threshold_grid(std::span<const double> values, std::span<const double> levels);

// 13 levels from 0.90 to 0.999, geometrically spaced in 1 - p.
std::vector<double> default_grid_levels();

}  // namespace tailmean
