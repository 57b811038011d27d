#include "tailmean/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "tailmean/baselines.hpp"
#include "tailmean/errors.hpp"
#include "tailmean/parallel.hpp"

namespace tailmean {
namespace {

class NaiveMethod final : public EstimationMethod {
 public:
  std::string name() const override { return "naive"; }
  bool uses_threshold() const override { return false; }
  MethodEstimate estimate(std::span<const double> values, std::optional<double>, std::uint64_t) const override {
    const auto e = naive_mean(values);
    return {e.estimate, e.se};
  }
};

class WinsorizedMethod final : public EstimationMethod {
 public:
  std::string name() const override { return "winsorized"; }
  bool uses_threshold() const override { return true; }
  MethodEstimate estimate(std::span<const double> values, std::optional<double> threshold,
                          std::uint64_t) const override {
    const auto e = winsorized_mean(values, threshold.value());
    return {e.estimate, e.se};
  }
};

class SemiparametricMethod final : public EstimationMethod {
 public:
  SemiparametricMethod(TailMethod tail, const MethodSettings& settings) : tail_(tail), settings_(settings) {}

  std::string name() const override {
    return tail_ == TailMethod::Imh ? "semiparametric-imh" : "semiparametric-laplace";
  }
  bool uses_threshold() const override { return true; }
  MethodEstimate estimate(std::span<const double> values, std::optional<double> threshold,
                          std::uint64_t seed) const override {
    MeanAnalysisOptions opt;
    opt.method = tail_;
    opt.imh.draws = settings_.imh_draws;
    opt.imh.seed = seed;
    const MeanAnalysis a = analyze_mean(values, threshold.value(), settings_.prior, opt);
    return {a.posterior.mean, a.posterior.sd()};
  }

 private:
  TailMethod tail_;
  MethodSettings settings_;
};

class SubsamplingMethod final : public EstimationMethod {
 public:
  explicit SubsamplingMethod(std::size_t subsamples) : subsamples_(subsamples) {}
  std::string name() const override { return "subsampling"; }
  bool uses_threshold() const override { return false; }
  MethodEstimate estimate(std::span<const double> values, std::optional<double>,
                          std::uint64_t seed) const override {
    SubsamplingOptions opt;
    opt.num_subsamples = subsamples_;
    opt.seed = seed;
    const auto e = subsampling_se(values, opt);
    return {e.result.estimate, e.result.se};
  }

 private:
  std::size_t subsamples_;
};

struct Cell {
  bool ok = false;
  double error = 0.0;
  double sd = 0.0;
};

struct ReplicateRecord {
  std::vector<std::optional<double>> thresholds;  // per level
  std::vector<std::optional<double>> ratios;      // per level, non-boundary fits only
  std::optional<std::size_t> selected;            // level index
  bool low_confidence = false;
  std::vector<std::vector<Cell>> cells;  // [method][level]; threshold-free methods use one cell
  std::vector<Cell> auto_cells;          // [method]
};

ReplicateRecord evaluate_dataset(std::span<const double> values, double truth,
                                 std::span<const std::unique_ptr<EstimationMethod>> methods,
                                 const StudyOptions& options, std::uint64_t seed) {
  const std::size_t levels = options.levels.size();
  ReplicateRecord rec;
  rec.thresholds.assign(levels, std::nullopt);
  rec.ratios.assign(levels, std::nullopt);

  std::vector<double> positive;
  for (double z : values) {
    if (z > 0.0) positive.push_back(z);
  }
  std::vector<double> level_u = quantile_grid(positive, options.levels);
  std::vector<double> grid = level_u;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<std::size_t> level_to_grid(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    level_to_grid[l] = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), level_u[l]) - grid.begin());
    rec.thresholds[l] = level_u[l];
  }

  const auto diags = threshold_scan(values, grid, options.scan_prior);
  for (std::size_t l = 0; l < levels; ++l) {
    const auto& d = diags[level_to_grid[l]];
    if (d.fit && !d.fit->boundary) rec.ratios[l] = d.fit->ratio;
  }
  try {
    const ThresholdChoice choice = select_threshold(diags, options.rule);
    for (std::size_t l = 0; l < levels; ++l) {
      if (level_to_grid[l] == choice.index) {
        rec.selected = l;
        break;
      }
    }
    rec.low_confidence = choice.low_confidence;
  } catch (const Error&) {
  }

  rec.cells.resize(methods.size());
  rec.auto_cells.resize(methods.size());
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto& method = *methods[k];
    auto run = [&](std::optional<double> u, std::uint64_t s) {
      Cell c;
      try {
        const MethodEstimate e = method.estimate(values, u, s);
        c = {std::isfinite(e.estimate) && std::isfinite(e.sd), e.estimate - truth, e.sd};
      } catch (const Error&) {
      }
      return c;
    };
    if (!method.uses_threshold()) {
      rec.cells[k].push_back(run(std::nullopt, derive_seed(seed, k, 0)));
      continue;
    }
    rec.cells[k].resize(levels);
    for (std::size_t l = 0; l < levels; ++l) rec.cells[k][l] = run(level_u[l], derive_seed(seed, k, l + 1));
    if (rec.selected) rec.auto_cells[k] = rec.cells[k][*rec.selected];
  }
  return rec;
}

StudyRow aggregate(const std::string& group, const std::string& method, const std::string& label,
                   const std::vector<Cell>& cells) {
  StudyRow row;
  row.group = group;
  row.method = method;
  row.threshold_label = label;
  double se = 0.0, err = 0.0, sd = 0.0;
  for (const Cell& c : cells) {
    if (!c.ok) {
      ++row.failures;
      continue;
    }
    ++row.replicates;
    se += c.error * c.error;
    err += c.error;
    sd += c.sd;
  }
  if (row.replicates > 0) {
    const double k = static_cast<double>(row.replicates);
    row.rmse = std::sqrt(se / k);
    row.bias = err / k;
    row.mean_sd = sd / k;
    if (row.rmse > 0.0) row.calibration = row.mean_sd / row.rmse;
  }
  return row;
}

void append_group(StudyResult& result, const std::string& group, const std::vector<ReplicateRecord>& records,
                  std::span<const std::unique_ptr<EstimationMethod>> methods, const StudyOptions& options) {
  const std::size_t levels = options.levels.size();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    const auto& method = *methods[k];
    if (!method.uses_threshold()) {
      std::vector<Cell> cells;
      for (const auto& r : records) cells.push_back(r.cells[k][0]);
      result.rows.push_back(aggregate(group, method.name(), "none", cells));
      continue;
    }
    for (std::size_t l = 0; l < levels; ++l) {
      std::vector<Cell> cells;
      double u_sum = 0.0, ratio_sum = 0.0;
      std::size_t u_count = 0, ratio_count = 0;
      for (const auto& r : records) {
        cells.push_back(r.cells[k][l]);
        if (r.thresholds[l]) {
          u_sum += *r.thresholds[l];
          ++u_count;
        }
        if (r.ratios[l]) {
          ratio_sum += *r.ratios[l];
          ++ratio_count;
        }
      }
      StudyRow row = aggregate(group, method.name(), level_label(options.levels[l]), cells);
      row.level = options.levels[l];
      if (u_count > 0) row.mean_threshold = u_sum / static_cast<double>(u_count);
      if (ratio_count > 0) row.mean_ratio = ratio_sum / static_cast<double>(ratio_count);
      result.rows.push_back(row);
    }
    std::vector<Cell> auto_cells;
    double u_sum = 0.0;
    std::size_t u_count = 0;
    for (const auto& r : records) {
      auto_cells.push_back(r.auto_cells[k]);
      if (r.selected && r.thresholds[*r.selected]) {
        u_sum += *r.thresholds[*r.selected];
        ++u_count;
      }
    }
    StudyRow row = aggregate(group, method.name(), "auto", auto_cells);
    if (u_count > 0) row.mean_threshold = u_sum / static_cast<double>(u_count);
    result.rows.push_back(row);
  }

  GroupSelections sel;
  sel.group = group;
  for (const auto& r : records) {
    sel.selected_level.push_back(r.selected);
    sel.low_confidence.push_back(r.low_confidence);
  }
  result.selections.push_back(std::move(sel));
}

void check_study_inputs(std::size_t replicates, std::span<const std::unique_ptr<EstimationMethod>> methods,
                        const StudyOptions& options) {
  if (replicates < 10) throw Error(ErrorKind::InvalidConfig, "studies need at least 10 replicates");
  if (methods.empty()) throw Error(ErrorKind::InvalidConfig, "no estimation methods given");
  if (options.levels.empty()) throw Error(ErrorKind::InvalidConfig, "no threshold levels given");
  for (double p : options.levels) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidConfig, "threshold levels must lie in (0, 1)");
  }
}

std::string format_group_xi(double xi) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "xi=%g", xi);
  return buf;
}

}  // namespace

void SimConfig::validate() const {
  if (!(xi > 0.0 && xi < 1.0)) throw Error(ErrorKind::InvalidConfig, "xi must lie in (0, 1)");
  if (n_total < 100) throw Error(ErrorKind::InvalidConfig, "n_total must be at least 100");
  if (!(exp_mean > 0.0)) throw Error(ErrorKind::InvalidConfig, "exp_mean must be positive");
  if (!(gpd_sigma > 0.0)) throw Error(ErrorKind::InvalidConfig, "gpd_sigma must be positive");
  if (!(tail_fraction >= 0.0 && tail_fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "tail_fraction must lie in [0, 1]");
  }
}

std::vector<double> simulate_dgp(const SimConfig& config, Rng& rng) {
  config.validate();
  const GpdParams tail_params(config.xi, config.gpd_sigma);
  const auto fixed_count =
      static_cast<std::size_t>(std::llround(config.tail_fraction * static_cast<double>(config.n_total)));
  std::vector<double> out;
  out.reserve(config.n_total);
  for (std::size_t i = 0; i < config.n_total; ++i) {
    double z = rng.exponential(config.exp_mean);
    const bool tail = config.random_tail ? rng.uniform() < config.tail_fraction : i < fixed_count;
    if (tail) z += gpd_quantile(tail_params, rng.uniform());
    out.push_back(z);
  }
  return out;
}

std::unique_ptr<EstimationMethod> make_method(const std::string& name, const MethodSettings& settings) {
  if (name == "naive") return std::make_unique<NaiveMethod>();
  if (name == "winsorized") return std::make_unique<WinsorizedMethod>();
  if (name == "semiparametric-laplace") return std::make_unique<SemiparametricMethod>(TailMethod::Laplace, settings);
  if (name == "semiparametric-imh") return std::make_unique<SemiparametricMethod>(TailMethod::Imh, settings);
  if (name == "subsampling") return std::make_unique<SubsamplingMethod>(settings.subsamples);
  throw Error(ErrorKind::InvalidConfig, "unknown method '" + name + "'");
}

std::vector<std::string> known_methods() {
  return {"naive", "winsorized", "semiparametric-laplace", "semiparametric-imh", "subsampling"};
}

std::vector<double> study_grid_levels() {
  constexpr int kLevels = 13;
  std::vector<double> levels;
  for (int k = 0; k < kLevels; ++k) {
    levels.push_back(1.0 - 0.5 * std::pow(0.002, static_cast<double>(k) / (kLevels - 1)));
  }
  return levels;
}

std::string level_label(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%.4f", level);
  return buf;
}

const StudyRow* StudyResult::find(const std::string& group, const std::string& method,
                                  const std::string& label) const {
  for (const auto& row : rows) {
    if (row.group == group && row.method == method && row.threshold_label == label) return &row;
  }
  return nullptr;
}

BackgroundPrior fit_background_prior(std::span<const double> big_sample, std::size_t chunk_size, std::size_t chunks,
                                     std::span<const double> levels, const SelectionRule& rule, std::size_t threads) {
  if (chunks < 2 || chunk_size < 10) throw Error(ErrorKind::InvalidConfig, "need at least two chunks of 10 values");
  if (chunks > big_sample.size() / chunk_size) {
    throw Error(ErrorKind::InvalidConfig, "background sample too small for the requested chunks");
  }
  std::vector<std::optional<double>> estimates(chunks);
  parallel_for(chunks, threads, [&](std::size_t k) {
    const auto chunk = big_sample.subspan(k * chunk_size, chunk_size);
    try {
      const std::vector<double> grid = make_threshold_grid(chunk, levels);
      const auto diags = threshold_scan(chunk, grid, BetaGammaPrior::reference());
      const ThresholdChoice choice = select_threshold(diags, rule);
      const auto& fit = diags[choice.index].fit;
      if (fit && !fit->boundary) estimates[k] = fit->xi_hat;
    } catch (const Error&) {
    }
  });
  BackgroundPrior out;
  for (const auto& e : estimates) {
    if (e) out.xi_estimates.push_back(*e);
  }
  out.prior = fit_beta_prior(out.xi_estimates);
  return out;
}

StudyResult run_simulation_study(std::span<const SimConfig> configs, std::size_t replicates,
                                 std::span<const std::unique_ptr<EstimationMethod>> methods,
                                 const StudyOptions& options) {
  check_study_inputs(replicates, methods, options);
  if (configs.empty()) throw Error(ErrorKind::InvalidConfig, "no simulation configs given");
  for (const auto& c : configs) c.validate();

  StudyResult result;
  for (const SimConfig& config : configs) {
    std::vector<ReplicateRecord> records(replicates);
    parallel_for(replicates, options.threads, [&](std::size_t r) {
      Rng rng(derive_seed(config.seed, r));
      const std::vector<double> data = simulate_dgp(config, rng);
      records[r] = evaluate_dataset(data, config.population_mean(), methods, options, derive_seed(config.seed, r, 3));
    });
    append_group(result, format_group_xi(config.xi), records, methods, options);
  }
  return result;
}

StudyResult run_subsample_validation(std::span<const double> big_sample, std::size_t subsample_size,
                                     std::size_t replicates,
                                     std::span<const std::unique_ptr<EstimationMethod>> methods,
                                     const StudyOptions& options, std::uint64_t seed) {
  check_study_inputs(replicates, methods, options);
  const std::size_t total = big_sample.size();
  if (subsample_size < 10 || subsample_size > total) {
    throw Error(ErrorKind::InvalidConfig, "subsample size must lie in [10, N]");
  }
  double truth = 0.0;
  {
    double carry = 0.0;
    for (double z : big_sample) {
      const double t = truth + z;
      carry += std::abs(truth) >= std::abs(z) ? (truth - t) + z : (z - t) + truth;
      truth = t;
    }
    truth = (truth + carry) / static_cast<double>(total);
  }

  std::vector<ReplicateRecord> records(replicates);
  parallel_for(replicates, options.threads, [&](std::size_t r) {
    // Floyd's sampling; sorted so the subsample keeps the big sample's order.
    Rng rng(derive_seed(seed, r));
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(subsample_size * 2);
    for (std::size_t j = total - subsample_size; j < total; ++j) {
      const std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::size_t> idx(chosen.begin(), chosen.end());
    std::sort(idx.begin(), idx.end());
    std::vector<double> sub;
    sub.reserve(subsample_size);
    for (std::size_t i : idx) sub.push_back(big_sample[i]);
    records[r] = evaluate_dataset(sub, truth, methods, options, derive_seed(seed, r, 3));
  });

  StudyResult result;
  append_group(result, "validation", records, methods, options);
  return result;
}

}  // namespace tailmean
