#include "tailmean/errors.hpp"

namespace tailmean {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "Domain";
    case ErrorKind::TooFewExceedances: return "TooFewExceedances";
    case ErrorKind::DegenerateCurvature: return "DegenerateCurvature";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::DegenerateMoments: return "DegenerateMoments";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::NoValidDiagnostics: return "NoValidDiagnostics";
    case ErrorKind::BootstrapFailure: return "BootstrapFailure";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace tailmean
