#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tailmean/semiparametric.hpp"
#include "tailmean/study.hpp"
#include "tailmean/threshold.hpp"

namespace tailmean {

struct InputDigest {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;

  friend bool operator==(const InputDigest&, const InputDigest&) = default;
};

InputDigest digest(std::span<const double> values);

struct PriorSpec {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;
  double d = 0.0;
  std::string source = "flags";  // or "estimates"

  BetaGammaPrior prior() const { return {a, b, c, d}; }
  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

struct TailFitReport {
  std::size_t bulk = 0;
  std::size_t exceedances = 0;
  double xi_hat = 0.0;  // posterior mode
  double sigma_hat = 0.0;
  bool boundary = false;
  double lambda_mean = 0.0;
  double lambda_variance = 0.0;
  std::string method = "laplace";
  std::optional<double> acceptance_rate;

  friend bool operator==(const TailFitReport&, const TailFitReport&) = default;
};

struct EstimateReport {
  double estimate = 0.0;
  double se = 0.0;

  friend bool operator==(const EstimateReport&, const EstimateReport&) = default;
};

struct DiagnosticRow {
  double u = 0.0;
  std::size_t n = 0;
  std::optional<double> xi_hat;
  std::optional<double> sigma_hat;
  std::optional<double> ratio;
  std::optional<double> q_n;
  bool boundary = false;
  bool selected = false;

  friend bool operator==(const DiagnosticRow&, const DiagnosticRow&) = default;
};

std::vector<DiagnosticRow> diagnostic_rows(std::span<const ThresholdDiagnostic> diagnostics,
                                           std::optional<std::size_t> selected);

struct AnalysisReport {
  InputDigest input;
  double threshold = 0.0;
  std::string selection = "given";  // or "rule"
  std::optional<bool> low_confidence;
  PriorSpec prior;
  TailFitReport tail;
  EstimateReport mean_posterior;  // se holds the posterior sd
  EstimateReport naive;
  EstimateReport winsorized;
  std::vector<DiagnosticRow> diagnostics;
  std::uint64_t seed = 1;
  std::size_t draws = 0;

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

struct AbReport {
  AnalysisReport control;    // group A
  AnalysisReport treatment;  // group B
  TreatmentEffect effect;    // gamma = mu_B - mu_A
};

struct ScanReport {
  PriorSpec prior;
  std::vector<DiagnosticRow> rows;
  std::optional<std::size_t> selected_index;
  std::optional<bool> low_confidence;
};

void to_json(nlohmann::json& j, const InputDigest& x);
void from_json(const nlohmann::json& j, InputDigest& x);
void to_json(nlohmann::json& j, const PriorSpec& x);
void from_json(const nlohmann::json& j, PriorSpec& x);
void to_json(nlohmann::json& j, const TailFitReport& x);
void from_json(const nlohmann::json& j, TailFitReport& x);
void to_json(nlohmann::json& j, const EstimateReport& x);
void from_json(const nlohmann::json& j, EstimateReport& x);
void to_json(nlohmann::json& j, const DiagnosticRow& x);
void from_json(const nlohmann::json& j, DiagnosticRow& x);
void to_json(nlohmann::json& j, const AnalysisReport& x);
void from_json(const nlohmann::json& j, AnalysisReport& x);
void to_json(nlohmann::json& j, const AbReport& x);
void to_json(nlohmann::json& j, const ScanReport& x);

// Column order: u,n,xi_hat,sigma_hat,ratio,q_n,boundary,selected
void write_scan_csv(std::ostream& out, const ScanReport& report);

// Column order: group,method,threshold,level,mean_threshold,mean_ratio,rmse,
// bias,mean_sd,calibration,replicates,failures
void write_study_csv(std::ostream& out, const StudyResult& result);
// One CSV per group and threshold-dependent method, named <group>_<method>.csv
// with '=' dropped from the group. Columns: threshold,level,rmse,bias,mean_sd,
// calibration,mean_ratio. Returns the paths written.
std::vector<std::filesystem::path> write_plot_data(const StudyResult& result, const std::filesystem::path& dir);

nlohmann::json study_to_json(const StudyResult& result, std::span<const double> levels);

}  // namespace tailmean
