#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailmean/semiparametric.hpp"
#include "tailmean/threshold.hpp"

namespace tailmean {

// Exponential bulk with a GPD addend on a random fraction of observations.
struct SimConfig {
  double xi = 0.5;
  std::size_t n_total = 100000;
  double exp_mean = 10.0;
  double gpd_sigma = 10.0;
  double tail_fraction = 0.5;
  // Independent coin per observation; when false the first
  // round(tail_fraction * n_total) observations get the addend.
  bool random_tail = true;
  std::uint64_t seed = 1;

  // Throws InvalidConfig.
  void validate() const;
  double population_mean() const { return exp_mean + tail_fraction * gpd_sigma / (1.0 - xi); }
};

std::vector<double> simulate_dgp(const SimConfig& config, Rng& rng);

struct MethodEstimate {
  double estimate = 0.0;
  double sd = 0.0;
};

// A named estimator plugged into the study harness. Threshold-free methods
// receive an empty threshold.
class EstimationMethod {
 public:
  virtual ~EstimationMethod() = default;
  virtual std::string name() const = 0;
  virtual bool uses_threshold() const = 0;
  virtual MethodEstimate estimate(std::span<const double> values, std::optional<double> threshold,
                                  std::uint64_t seed) const = 0;
};

struct MethodSettings {
  BetaGammaPrior prior;
  std::size_t imh_draws = 1000;
  std::size_t subsamples = 200;
};

// Known names: naive, winsorized, semiparametric-laplace, semiparametric-imh,
// subsampling. Throws InvalidConfig for anything else.
std::unique_ptr<EstimationMethod> make_method(const std::string& name, const MethodSettings& settings = {});
std::vector<std::string> known_methods();

struct StudyOptions {
  std::vector<double> levels;  // quantile levels of the positive data
  BetaGammaPrior scan_prior;   // prior for the threshold scan
  SelectionRule rule;
  std::size_t threads = 1;
};

// Grid levels for the simulation study: geometric in 1 - p from 0.5 to 0.001.
std::vector<double> study_grid_levels();

struct StudyRow {
  std::string group;  // e.g. "xi=0.5" or "validation"
  std::string method;
  std::string threshold_label;  // "none", "auto", or "q0.9500"
  std::optional<double> level;
  std::optional<double> mean_threshold;
  std::optional<double> mean_ratio;
  double rmse = 0.0;
  double bias = 0.0;
  double mean_sd = 0.0;
  std::optional<double> calibration;  // mean_sd / rmse
  std::size_t replicates = 0;
  std::size_t failures = 0;
};

struct GroupSelections {
  std::string group;
  std::vector<std::optional<std::size_t>> selected_level;  // per replicate
  std::vector<bool> low_confidence;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<GroupSelections> selections;

  const StudyRow* find(const std::string& group, const std::string& method, const std::string& label) const;
};

std::string level_label(double level);

// Informative tail-index prior from a large background sample: the sample is
// cut into `chunks` consecutive blocks of `chunk_size`, each block's tail index
// is fit at its rule-selected threshold (reference prior), and a Beta is moment
// matched to those estimates. Blocks whose fit fails are skipped.
struct BackgroundPrior {
  BetaGammaPrior prior;
  std::vector<double> xi_estimates;
};

BackgroundPrior fit_background_prior(std::span<const double> big_sample, std::size_t chunk_size, std::size_t chunks,
                                     std::span<const double> levels, const SelectionRule& rule = {},
                                     std::size_t threads = 1);

// Simulates `replicates` datasets per config and scores each method against
// the analytic population mean at every grid level and at the rule-selected
// threshold ("auto"). Replicate r of a config draws from derive_seed(seed, r).
StudyResult run_simulation_study(std::span<const SimConfig> configs, std::size_t replicates,
                                 std::span<const std::unique_ptr<EstimationMethod>> methods,
                                 const StudyOptions& options);

// Draws `replicates` without-replacement subsamples of `big_sample` and scores
// each method against the full-sample mean.
StudyResult run_subsample_validation(std::span<const double> big_sample, std::size_t subsample_size,
                                     std::size_t replicates,
                                     std::span<const std::unique_ptr<EstimationMethod>> methods,
                                     const StudyOptions& options, std::uint64_t seed);

}  // namespace tailmean
