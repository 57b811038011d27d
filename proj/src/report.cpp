#include "tailmean/report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

#include "tailmean/errors.hpp"
#include "tailmean/io.hpp"

namespace tailmean {
namespace {

using nlohmann::json;

template <class T>
json optional_json(const std::optional<T>& x) {
  return x ? json(*x) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

std::string csv_field(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

}  // namespace

InputDigest digest(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::EmptySample, "no values");
  InputDigest d;
  d.count = values.size();
  d.min = *std::min_element(values.begin(), values.end());
  d.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double z : values) sum += z;
  d.mean = sum / static_cast<double>(values.size());
  return d;
}

std::vector<DiagnosticRow> diagnostic_rows(std::span<const ThresholdDiagnostic> diagnostics,
                                           std::optional<std::size_t> selected) {
  std::vector<DiagnosticRow> rows;
  for (std::size_t i = 0; i < diagnostics.size(); ++i) {
    const auto& d = diagnostics[i];
    DiagnosticRow row;
    row.u = d.u;
    row.n = d.n;
    if (d.fit) {
      row.xi_hat = d.fit->xi_hat;
      row.sigma_hat = d.fit->sigma_hat;
      row.ratio = d.fit->ratio;
      row.boundary = d.fit->boundary;
    }
    row.q_n = d.q_n;
    row.selected = selected && *selected == i;
    rows.push_back(row);
  }
  return rows;
}

void to_json(json& j, const InputDigest& x) {
  j = json{{"count", x.count}, {"min", x.min}, {"max", x.max}, {"mean", x.mean}};
}
void from_json(const json& j, InputDigest& x) {
  j.at("count").get_to(x.count);
  j.at("min").get_to(x.min);
  j.at("max").get_to(x.max);
  j.at("mean").get_to(x.mean);
}

void to_json(json& j, const PriorSpec& x) {
  j = json{{"a", x.a}, {"b", x.b}, {"c", x.c}, {"d", x.d}, {"source", x.source}};
}
void from_json(const json& j, PriorSpec& x) {
  j.at("a").get_to(x.a);
  j.at("b").get_to(x.b);
  j.at("c").get_to(x.c);
  j.at("d").get_to(x.d);
  j.at("source").get_to(x.source);
}

void to_json(json& j, const TailFitReport& x) {
  j = json{{"bulk", x.bulk},
           {"exceedances", x.exceedances},
           {"xi_hat", x.xi_hat},
           {"sigma_hat", x.sigma_hat},
           {"boundary", x.boundary},
           {"lambda_mean", x.lambda_mean},
           {"lambda_variance", x.lambda_variance},
           {"method", x.method},
           {"acceptance_rate", optional_json(x.acceptance_rate)}};
}
void from_json(const json& j, TailFitReport& x) {
  j.at("bulk").get_to(x.bulk);
  j.at("exceedances").get_to(x.exceedances);
  j.at("xi_hat").get_to(x.xi_hat);
  j.at("sigma_hat").get_to(x.sigma_hat);
  j.at("boundary").get_to(x.boundary);
  j.at("lambda_mean").get_to(x.lambda_mean);
  j.at("lambda_variance").get_to(x.lambda_variance);
  j.at("method").get_to(x.method);
  x.acceptance_rate = optional_from<double>(j, "acceptance_rate");
}

void to_json(json& j, const EstimateReport& x) { j = json{{"estimate", x.estimate}, {"se", x.se}}; }
void from_json(const json& j, EstimateReport& x) {
  j.at("estimate").get_to(x.estimate);
  j.at("se").get_to(x.se);
}

void to_json(json& j, const DiagnosticRow& x) {
  j = json{{"u", x.u},
           {"n", x.n},
           {"xi_hat", optional_json(x.xi_hat)},
           {"sigma_hat", optional_json(x.sigma_hat)},
           {"ratio", optional_json(x.ratio)},
           {"q_n", optional_json(x.q_n)},
           {"boundary", x.boundary},
           {"selected", x.selected}};
}
void from_json(const json& j, DiagnosticRow& x) {
  j.at("u").get_to(x.u);
  j.at("n").get_to(x.n);
  x.xi_hat = optional_from<double>(j, "xi_hat");
  x.sigma_hat = optional_from<double>(j, "sigma_hat");
  x.ratio = optional_from<double>(j, "ratio");
  x.q_n = optional_from<double>(j, "q_n");
  j.at("boundary").get_to(x.boundary);
  j.at("selected").get_to(x.selected);
}

void to_json(json& j, const AnalysisReport& x) {
  j = json{{"command", "fit"},
           {"input", x.input},
           {"threshold", {{"u", x.threshold}, {"mode", x.selection}, {"low_confidence", optional_json(x.low_confidence)}}},
           {"prior", x.prior},
           {"tail_fit", x.tail},
           {"mean_posterior", {{"mean", x.mean_posterior.estimate}, {"sd", x.mean_posterior.se}}},
           {"baselines", {{"naive", x.naive}, {"winsorized", x.winsorized}}},
           {"diagnostics", x.diagnostics},
           {"settings", {{"seed", x.seed}, {"draws", x.draws}}}};
}
void from_json(const json& j, AnalysisReport& x) {
  j.at("input").get_to(x.input);
  const auto& t = j.at("threshold");
  t.at("u").get_to(x.threshold);
  t.at("mode").get_to(x.selection);
  x.low_confidence = optional_from<bool>(t, "low_confidence");
  j.at("prior").get_to(x.prior);
  j.at("tail_fit").get_to(x.tail);
  j.at("mean_posterior").at("mean").get_to(x.mean_posterior.estimate);
  j.at("mean_posterior").at("sd").get_to(x.mean_posterior.se);
  j.at("baselines").at("naive").get_to(x.naive);
  j.at("baselines").at("winsorized").get_to(x.winsorized);
  j.at("diagnostics").get_to(x.diagnostics);
  j.at("settings").at("seed").get_to(x.seed);
  j.at("settings").at("draws").get_to(x.draws);
}

void to_json(json& j, const AbReport& x) {
  j = json{{"command", "ab"},
           {"control", x.control},
           {"treatment", x.treatment},
           {"treatment_effect", {{"gamma", x.effect.gamma}, {"sd", x.effect.sd}}}};
}

void to_json(json& j, const ScanReport& x) {
  j = json{{"command", "scan"},
           {"prior", x.prior},
           {"selected_index", optional_json(x.selected_index)},
           {"low_confidence", optional_json(x.low_confidence)},
           {"rows", x.rows}};
}

void write_scan_csv(std::ostream& out, const ScanReport& report) {
  out << "u,n,xi_hat,sigma_hat,ratio,q_n,boundary,selected\n";
  for (const auto& r : report.rows) {
    out << format_double(r.u) << ',' << r.n << ',' << csv_field(r.xi_hat) << ',' << csv_field(r.sigma_hat) << ','
        << csv_field(r.ratio) << ',' << csv_field(r.q_n) << ',' << (r.boundary ? 1 : 0) << ','
        << (r.selected ? 1 : 0) << '\n';
  }
}

void write_study_csv(std::ostream& out, const StudyResult& result) {
  out << "group,method,threshold,level,mean_threshold,mean_ratio,rmse,bias,mean_sd,calibration,replicates,failures\n";
  for (const auto& r : result.rows) {
    out << r.group << ',' << r.method << ',' << r.threshold_label << ',' << csv_field(r.level) << ','
        << csv_field(r.mean_threshold) << ',' << csv_field(r.mean_ratio) << ',' << format_double(r.rmse) << ','
        << format_double(r.bias) << ',' << format_double(r.mean_sd) << ',' << csv_field(r.calibration) << ','
        << r.replicates << ',' << r.failures << '\n';
  }
}

std::vector<std::filesystem::path> write_plot_data(const StudyResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::InvalidConfig, "cannot create '" + dir.string() + "'");
  std::vector<std::filesystem::path> written;
  std::map<std::filesystem::path, std::ofstream> files;
  for (const auto& r : result.rows) {
    if (!r.level) continue;
    std::string group = r.group;
    std::erase(group, '=');
    const auto path = dir / (group + "_" + r.method + ".csv");
    auto it = files.find(path);
    if (it == files.end()) {
      it = files.emplace(path, std::ofstream(path, std::ios::binary)).first;
      if (!it->second) throw Error(ErrorKind::InvalidConfig, "cannot write '" + path.string() + "'");
      it->second << "threshold,level,rmse,bias,mean_sd,calibration,mean_ratio\n";
      written.push_back(path);
    }
    it->second << csv_field(r.mean_threshold) << ',' << format_double(*r.level) << ',' << format_double(r.rmse) << ','
               << format_double(r.bias) << ',' << format_double(r.mean_sd) << ',' << csv_field(r.calibration) << ','
               << csv_field(r.mean_ratio) << '\n';
  }
  return written;
}

json study_to_json(const StudyResult& result, std::span<const double> levels) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back(json{{"group", r.group},
                        {"method", r.method},
                        {"threshold", r.threshold_label},
                        {"level", optional_json(r.level)},
                        {"mean_threshold", optional_json(r.mean_threshold)},
                        {"mean_ratio", optional_json(r.mean_ratio)},
                        {"rmse", r.rmse},
                        {"bias", r.bias},
                        {"mean_sd", r.mean_sd},
                        {"calibration", optional_json(r.calibration)},
                        {"replicates", r.replicates},
                        {"failures", r.failures}});
  }
  json selections = json::array();
  for (const auto& s : result.selections) {
    json picked = json::array();
    for (const auto& i : s.selected_level) picked.push_back(optional_json(i));
    selections.push_back(json{{"group", s.group}, {"selected_level", picked}, {"low_confidence", s.low_confidence}});
  }
  return json{{"levels", std::vector<double>(levels.begin(), levels.end())}, {"rows", rows}, {"selections", selections}};
}

}  // namespace tailmean
