#include "tailmean/cli.hpp"

#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tailmean/baselines.hpp"
#include "tailmean/errors.hpp"
#include "tailmean/io.hpp"

namespace tailmean {
namespace {

using nlohmann::json;

struct Flags {
  std::vector<std::string> inputs;
  std::optional<double> threshold;
  bool auto_threshold = false;
  std::string prior_xi;
  std::string prior_sigma;
  std::string prior_estimates;
  std::string method = "laplace";
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out;
  std::string format = "json";
  std::vector<double> levels;
  std::vector<double> grid;
  double near_one_tol = 0.15;

  // simulate / validate
  std::vector<double> xis;
  std::size_t n_total = 100000;
  double exp_mean = 10.0;
  double gpd_sigma = 10.0;
  double tail_fraction = 0.5;
  std::size_t replicates = 0;
  std::vector<std::string> methods;
  std::size_t subsamples = 200;
  std::string big_input;
  std::size_t big_n = 10000000;
  std::size_t subsample_size = 50000;
  std::size_t background_chunks = 0;
  std::string plot_dir;
  bool fixed_tail = false;
};

std::pair<double, double> parse_pair(const std::string& text, const char* flag) {
  const auto comma = text.find(',');
  double x = 0.0, y = 0.0;
  std::size_t used = 0;
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    x = std::stod(text.substr(0, comma), &used);
    if (used != comma) throw std::invalid_argument(text);
    const std::string rest = text.substr(comma + 1);
    y = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, std::string(flag) + " expects two numbers 'x,y', got '" + text + "'");
  }
  return {x, y};
}

PriorSpec prior_from_flags(const Flags& f) {
  PriorSpec spec;
  if (!f.prior_xi.empty() && !f.prior_estimates.empty()) {
    throw Error(ErrorKind::InvalidConfig, "--prior-xi and --prior-from-estimates are exclusive");
  }
  if (!f.prior_xi.empty()) std::tie(spec.a, spec.b) = parse_pair(f.prior_xi, "--prior-xi");
  if (!f.prior_estimates.empty()) {
    const std::vector<double> est = read_values_file(f.prior_estimates, 2);
    for (double x : est) {
      if (!(x > 0.0 && x < 1.0)) {
        throw Error(ErrorKind::InvalidInput, f.prior_estimates + ": tail-index estimates must lie in (0, 1)");
      }
    }
    const BetaGammaPrior fitted = fit_beta_prior(est);
    spec.a = fitted.a();
    spec.b = fitted.b();
    spec.source = "estimates";
  }
  if (!f.prior_sigma.empty()) std::tie(spec.c, spec.d) = parse_pair(f.prior_sigma, "--prior-sigma");
  try {
    (void)spec.prior();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("invalid prior: ") + e.what());
  }
  return spec;
}

FitSettings fit_settings(const Flags& f) {
  if (f.threshold && f.auto_threshold) throw Error(ErrorKind::InvalidConfig, "--threshold and --auto are exclusive");
  if (f.method == "imh" && f.draws < 100) throw Error(ErrorKind::InvalidConfig, "--draws must be at least 100");
  FitSettings s;
  s.threshold = f.threshold;
  s.levels = f.levels;
  s.grid = f.grid;
  s.rule.near_one_tol = f.near_one_tol;
  s.prior = prior_from_flags(f);
  s.method = f.method == "imh" ? TailMethod::Imh : TailMethod::Laplace;
  s.draws = f.draws;
  s.seed = f.seed;
  s.threads = f.threads;
  return s;
}

std::vector<double> scan_grid(std::span<const double> values, const FitSettings& s, std::span<const double> fallback) {
  if (!s.grid.empty()) return s.grid;
  return make_threshold_grid(values, s.levels.empty() ? fallback : std::span<const double>(s.levels));
}

void check_levels(std::span<const double> levels) {
  for (double p : levels) {
    if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidConfig, "grid levels must lie in (0, 1)");
  }
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw Error(ErrorKind::InvalidConfig, "cannot write '" + path + "'");
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

void emit_json(const Flags& f, std::ostream& fallback, const json& j) {
  Output o(f.out, fallback);
  o.stream() << j.dump(2) << '\n';
}

void require_json(const Flags& f, const char* command) {
  if (f.format != "json") {
    throw Error(ErrorKind::InvalidConfig, std::string(command) + " writes JSON only; csv is for scan, simulate, validate");
  }
}

int cmd_fit(const Flags& f, std::ostream& out) {
  require_json(f, "fit");
  const FitSettings s = fit_settings(f);
  const std::vector<double> values = read_values_file(f.inputs.at(0));
  emit_json(f, out, json(run_fit(values, s)));
  return kExitOk;
}

int cmd_ab(const Flags& f, std::ostream& out) {
  require_json(f, "ab");
  const FitSettings s = fit_settings(f);
  const std::vector<double> a = read_values_file(f.inputs.at(0));
  const std::vector<double> b = read_values_file(f.inputs.at(1));
  AbReport report;
  report.control = run_fit(a, s);
  report.treatment = run_fit(b, s);
  MeanPosterior pa, pb;
  pa.mean = report.control.mean_posterior.estimate;
  pa.variance = report.control.mean_posterior.se * report.control.mean_posterior.se;
  pb.mean = report.treatment.mean_posterior.estimate;
  pb.variance = report.treatment.mean_posterior.se * report.treatment.mean_posterior.se;
  report.effect = treatment_effect(pb, pa);
  emit_json(f, out, json(report));
  return kExitOk;
}

int cmd_scan(const Flags& f, std::ostream& out) {
  FitSettings s = fit_settings(f);
  check_levels(s.levels);
  const std::vector<double> values = read_values_file(f.inputs.at(0));
  const std::vector<double> grid = scan_grid(values, s, default_grid_levels());
  const auto diags = threshold_scan(values, grid, s.prior.prior(), s.threads);
  ScanReport report;
  report.prior = s.prior;
  std::size_t valid = 0;
  for (const auto& d : diags) valid += d.valid() ? 1 : 0;
  if (valid == 0) throw Error(ErrorKind::NoValidDiagnostics, "no grid threshold gave a valid tail fit");
  if (valid >= 2) {
    const ThresholdChoice choice = select_threshold(diags, s.rule);
    report.selected_index = choice.index;
    report.low_confidence = choice.low_confidence;
  }
  report.rows = diagnostic_rows(diags, report.selected_index);
  Output o(f.out, out);
  if (f.format == "csv") {
    write_scan_csv(o.stream(), report);
  } else {
    o.stream() << json(report).dump(2) << '\n';
  }
  return kExitOk;
}

std::vector<std::unique_ptr<EstimationMethod>> study_methods(const Flags& f, const BetaGammaPrior& prior) {
  MethodSettings ms;
  ms.prior = prior;
  ms.imh_draws = f.draws;
  ms.subsamples = f.subsamples;
  std::vector<std::unique_ptr<EstimationMethod>> methods;
  for (const auto& name : f.methods) methods.push_back(make_method(name, ms));
  return methods;
}

void emit_study(const Flags& f, std::ostream& out, const StudyResult& result, std::span<const double> levels,
                const char* command, const json& extra) {
  if (!f.plot_dir.empty()) write_plot_data(result, f.plot_dir);
  Output o(f.out, out);
  if (f.format == "csv") {
    write_study_csv(o.stream(), result);
  } else {
    json j = study_to_json(result, levels);
    j["command"] = command;
    for (const auto& [k, v] : extra.items()) j[k] = v;
    o.stream() << j.dump(2) << '\n';
  }
}

StudyOptions study_options(const Flags& f, const BetaGammaPrior& scan_prior) {
  StudyOptions opt;
  opt.levels = f.levels.empty() ? study_grid_levels() : f.levels;
  check_levels(opt.levels);
  opt.scan_prior = scan_prior;
  opt.rule.near_one_tol = f.near_one_tol;
  opt.threads = f.threads;
  return opt;
}

SimConfig sim_config(const Flags& f, double xi, std::uint64_t seed) {
  SimConfig c;
  c.xi = xi;
  c.n_total = f.n_total;
  c.exp_mean = f.exp_mean;
  c.gpd_sigma = f.gpd_sigma;
  c.tail_fraction = f.tail_fraction;
  c.random_tail = !f.fixed_tail;
  c.seed = seed;
  c.validate();
  return c;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
  const PriorSpec prior = prior_from_flags(f);
  const StudyOptions opt = study_options(f, prior.prior());
  const std::vector<double> xis = f.xis.empty() ? std::vector<double>{0.2, 0.5, 0.8} : f.xis;
  std::vector<SimConfig> configs;
  for (std::size_t k = 0; k < xis.size(); ++k) configs.push_back(sim_config(f, xis[k], derive_seed(f.seed, k)));
  const auto methods = study_methods(f, prior.prior());
  const StudyResult result = run_simulation_study(configs, f.replicates, methods, opt);
  emit_study(f, out, result, opt.levels, "simulate", json{{"prior", prior}, {"seed", f.seed}});
  return kExitOk;
}

int cmd_validate(const Flags& f, std::ostream& out) {
  PriorSpec prior = prior_from_flags(f);
  if (f.background_chunks > 0 && (!f.prior_xi.empty() || !f.prior_estimates.empty())) {
    throw Error(ErrorKind::InvalidConfig, "--background-chunks replaces --prior-xi and --prior-from-estimates");
  }
  if (f.replicates < 10) throw Error(ErrorKind::InvalidConfig, "--replicates must be at least 10");
  std::vector<double> big;
  if (!f.big_input.empty()) {
    big = read_values_file(f.big_input);
  } else {
    if (f.xis.size() > 1) throw Error(ErrorKind::InvalidConfig, "validate takes a single --xi");
    SimConfig c = sim_config(f, f.xis.empty() ? 0.5 : f.xis[0], derive_seed(f.seed, 0));
    c.n_total = f.big_n;
    c.validate();
    Rng rng(c.seed);
    big = simulate_dgp(c, rng);
  }
  StudyOptions opt = study_options(f, prior.prior());
  json extra = {{"seed", f.seed}, {"big_sample_size", big.size()}, {"subsample_size", f.subsample_size}};
  if (f.background_chunks > 0) {
    const BackgroundPrior bg =
        fit_background_prior(big, f.subsample_size, f.background_chunks, default_grid_levels(), opt.rule, f.threads);
    prior.a = bg.prior.a();
    prior.b = bg.prior.b();
    prior.source = "background";
    opt.scan_prior = prior.prior();
    extra["background_estimates"] = bg.xi_estimates.size();
  }
  extra["prior"] = prior;
  const auto methods = study_methods(f, prior.prior());
  const StudyResult result =
      run_subsample_validation(big, f.subsample_size, f.replicates, methods, opt, derive_seed(f.seed, 1));
  emit_study(f, out, result, opt.levels, "validate", extra);
  return kExitOk;
}

void add_prior_flags(CLI::App* app, Flags& f) {
  app->add_option("--prior-xi", f.prior_xi, "Beta(a,b) prior on the tail index, as a,b (default 1,1)");
  app->add_option("--prior-sigma", f.prior_sigma, "Gamma(c,d) prior on the scale, as c,d (default 0,0)");
  app->add_option("--prior-from-estimates", f.prior_estimates,
                  "file of tail-index estimates; moment-matched Beta prior on the tail index");
}

void add_output_flags(CLI::App* app, Flags& f, bool csv) {
  app->add_option("--out", f.out, "write to this file instead of stdout");
  auto* fmt = app->add_option("--format", f.format, csv ? "json or csv" : "json");
  fmt->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  app->add_option("--seed", f.seed, "master seed");
}

void add_grid_flags(CLI::App* app, Flags& f) {
  app->add_option("--levels", f.levels, "quantile levels of the positive data for the threshold grid")
      ->delimiter(',');
  app->add_option("--near-one-tol", f.near_one_tol, "tolerance of the ratio-near-one rule")
      ->check(CLI::PositiveNumber);
}

void add_fit_flags(CLI::App* app, Flags& f) {
  app->add_option("--threshold", f.threshold, "tail threshold u");
  app->add_flag("--auto", f.auto_threshold, "select u by the ratio rule (default when no --threshold)");
  app->add_option("--grid", f.grid, "explicit thresholds to scan")->delimiter(',');
  app->add_option("--method", f.method, "laplace or imh")->check(CLI::IsMember({"laplace", "imh"}));
  app->add_option("--draws", f.draws, "iMH draws");
  add_prior_flags(app, f);
  add_grid_flags(app, f);
}

void add_study_flags(CLI::App* app, Flags& f, std::size_t default_replicates) {
  f.replicates = default_replicates;
  app->add_option("--xi", f.xis, "tail indices of the simulated data")->delimiter(',');
  app->add_option("--n-total", f.n_total, "observations per simulated dataset");
  app->add_option("--exp-mean", f.exp_mean, "mean of the exponential bulk");
  app->add_option("--gpd-sigma", f.gpd_sigma, "scale of the GPD addend");
  app->add_option("--tail-fraction", f.tail_fraction, "probability of the GPD addend");
  app->add_flag("--fixed-tail", f.fixed_tail, "add the GPD draw to a fixed share of observations, not a random one");
  app->add_option("--plot-dir", f.plot_dir, "also write per-threshold plot data CSVs here");
  app->add_option("--replicates", f.replicates, "replicates");
  f.methods = {"naive", "winsorized", "semiparametric-laplace"};
  app->add_option("--methods", f.methods, "estimators to score")->delimiter(',');
  app->add_option("--draws", f.draws, "iMH draws for semiparametric-imh");
  app->add_option("--subsamples", f.subsamples, "subsamples for the subsampling method");
  add_prior_flags(app, f);
  add_grid_flags(app, f);
}

std::string error_json(const std::string& kind, const std::string& message, int code) {
  return json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() + "\n";
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return kExitInput;
    case ErrorKind::InvalidConfig: return kExitConfig;
    default: return kExitInference;
  }
}

AnalysisReport run_fit(std::span<const double> values, const FitSettings& s) {
  check_levels(s.levels);
  const BetaGammaPrior prior = s.prior.prior();
  AnalysisReport report;
  report.input = digest(values);
  report.prior = s.prior;
  report.seed = s.seed;
  report.draws = s.method == TailMethod::Imh ? s.draws : 0;

  if (s.threshold) {
    report.threshold = *s.threshold;
    report.selection = "given";
  } else {
    const std::vector<double> grid = scan_grid(values, s, default_grid_levels());
    const auto diags = threshold_scan(values, grid, prior, s.threads);
    const ThresholdChoice choice = select_threshold(diags, s.rule);
    report.threshold = choice.u;
    report.selection = "rule";
    report.low_confidence = choice.low_confidence;
    report.diagnostics = diagnostic_rows(diags, choice.index);
  }

  MeanAnalysisOptions opt;
  opt.method = s.method;
  opt.imh.draws = s.draws;
  opt.imh.seed = s.seed;
  opt.imh.threads = s.threads;
  const MeanAnalysis a = analyze_mean(values, report.threshold, prior, opt);
  report.tail.bulk = a.m;
  report.tail.exceedances = a.n;
  report.tail.xi_hat = a.map.params.xi();
  report.tail.sigma_hat = a.map.params.sigma();
  report.tail.boundary = a.map.boundary;
  report.tail.lambda_mean = a.posterior.lambda_mean;
  report.tail.lambda_variance = a.posterior.lambda_variance;
  report.tail.method = std::string(to_string(a.posterior.method));
  report.tail.acceptance_rate = a.acceptance_rate;
  report.mean_posterior = {a.posterior.mean, a.posterior.sd()};

  const EstimateWithSe naive = naive_mean(values);
  const EstimateWithSe wins = winsorized_mean(values, report.threshold);
  report.naive = {naive.estimate, naive.se};
  report.winsorized = {wins.estimate, wins.se};
  return report;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semiparametric posterior inference for the mean of heavy-tailed samples", "tailmean"};
  app.require_subcommand(1);
  Flags f;

  auto* fit = app.add_subcommand("fit", "posterior of the mean for one sample");
  fit->add_option("input", f.inputs, "file with one value per line")->required()->expected(1);
  add_fit_flags(fit, f);
  add_output_flags(fit, f, false);

  auto* ab = app.add_subcommand("ab", "treatment effect mu_B - mu_A for two independent samples");
  ab->add_option("inputs", f.inputs, "files for group A (control) and group B (treatment)")->required()->expected(2);
  add_fit_flags(ab, f);
  add_output_flags(ab, f, false);

  auto* scan = app.add_subcommand("scan", "tail fits and the ratio diagnostic over a threshold grid");
  scan->add_option("input", f.inputs, "file with one value per line")->required()->expected(1);
  scan->add_option("--grid", f.grid, "explicit thresholds to scan")->delimiter(',');
  add_prior_flags(scan, f);
  add_grid_flags(scan, f);
  add_output_flags(scan, f, true);

  auto* simulate = app.add_subcommand("simulate", "simulation study over tail indices and thresholds");
  add_study_flags(simulate, f, 20);
  add_output_flags(simulate, f, true);

  auto* validate = app.add_subcommand("validate", "subsample study against a big sample's mean");
  add_study_flags(validate, f, 100);
  validate->add_option("--input", f.big_input, "big sample file; simulated when absent");
  validate->add_option("--big-n", f.big_n, "size of the simulated big sample");
  validate->add_option("--subsample-size", f.subsample_size, "subsample size");
  validate->add_option("--background-chunks", f.background_chunks,
                       "fit the tail-index prior from this many big-sample blocks of the subsample size");
  add_output_flags(validate, f, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "tailmean: " << e.what() << '\n';
    out << error_json("InvalidConfig", e.what(), kExitConfig);
    return kExitConfig;
  }

  try {
    if (fit->parsed()) return cmd_fit(f, out);
    if (ab->parsed()) return cmd_ab(f, out);
    if (scan->parsed()) return cmd_scan(f, out);
    if (simulate->parsed()) return cmd_simulate(f, out);
    return cmd_validate(f, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << "tailmean: " << e.what() << '\n';
    out << error_json(std::string(to_string(e.kind())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    err << "tailmean: " << e.what() << '\n';
    out << error_json("Internal", e.what(), kExitInference);
    return kExitInference;
  }
}

}  // namespace tailmean
