#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tailmean/errors.hpp"
#include "tailmean/report.hpp"

namespace tailmean {

// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitInference = 3, kExitConfig = 4 };

int exit_code_for(ErrorKind kind);

struct FitSettings {
  std::optional<double> threshold;  // rule-selected when empty
  std::vector<double> levels;       // quantile levels for the scan grid; defaults when empty
  std::vector<double> grid;         // explicit thresholds, overrides levels
  SelectionRule rule;
  PriorSpec prior;
  TailMethod method = TailMethod::Laplace;
  std::size_t draws = 1000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

// The fit pipeline behind `tailmean fit`: optional threshold scan and
// selection, tail fit, posterior of the mean, and baselines at the same u.
AnalysisReport run_fit(std::span<const double> values, const FitSettings& settings);

// Entry point of the tool. Results go to `out` (or --out); failures print a
// JSON error object to `out` and a message to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tailmean
