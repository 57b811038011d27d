#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "tailmean/tail_posterior.hpp"
#include "tailmean/threshold.hpp"

namespace tailmean {

enum class BaselineMethod { Naive, Winsorized, Subsampling };
std::string_view to_string(BaselineMethod method);

struct EstimateWithSe {
  double estimate = 0.0;
  double se = 0.0;
  BaselineMethod method = BaselineMethod::Naive;
};

// Sample mean and sd / sqrt(N) with the n - 1 denominator.
EstimateWithSe naive_mean(std::span<const double> values);

// Values strictly above u are replaced by u before averaging.
EstimateWithSe winsorized_mean(std::span<const double> values, double threshold);

struct SubsamplingOptions {
  std::size_t num_subsamples = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  // Threshold for the tail-index fit; rule-selected on the default grid when empty.
  std::optional<double> threshold;
  SelectionRule rule;
};

struct SubsamplingEstimate {
  EstimateWithSe result;
  double beta = 0.5;                 // learning-rate exponent min(0.5, 1 - xi_hat)
  std::optional<double> xi_hat;      // absent when the tail fit failed
  std::optional<double> threshold;
  bool rate_fallback = false;        // tail fit failed or hit the xi boundary; beta = 0.5 used
  std::size_t subsample_size = 0;
};

// Half-sample subsampling standard error. Subsample means (without
// replacement, size b = floor(N/2)) are rescaled to size N by
// (b/N)^beta / sqrt(1 - b/N), the last factor undoing the finite-population
// shrinkage of without-replacement draws.
SubsamplingEstimate subsampling_se(std::span<const double> values, const SubsamplingOptions& options = {});

}  // namespace tailmean
