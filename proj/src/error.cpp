#include "evc/error.hpp"

namespace evc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::UnknownSite: return "UnknownSite";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::QuotaInfeasible: return "QuotaInfeasible";
    case ErrorCode::NoPublicIpAtFrontEnd: return "NoPublicIpAtFrontEnd";
    case ErrorCode::BadBounds: return "BadBounds";
    case ErrorCode::SubnetOverlap: return "SubnetOverlap";
    case ErrorCode::NoPublicIpAvailable: return "NoPublicIpAvailable";
    case ErrorCode::EmptyPlacement: return "EmptyPlacement";
    case ErrorCode::PrefixExhausted: return "PrefixExhausted";
    case ErrorCode::UnassignedAddresses: return "UnassignedAddresses";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::NoBackupCentralPoint: return "NoBackupCentralPoint";
    case ErrorCode::DuplicateSubject: return "DuplicateSubject";
    case ErrorCode::NoEligibleSite: return "NoEligibleSite";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::InvalidUpdate: return "InvalidUpdate";
    case ErrorCode::ScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::NonTermination: return "NonTermination";
  }
  return "Unknown";
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  if (diagnostics.empty()) {
    return "validation failed";
  }
  std::string text = diagnostics.front().message;
  if (diagnostics.size() > 1) {
    text += " (+" + std::to_string(diagnostics.size() - 1) + " more)";
  }
  return text;
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(diagnostics.empty() ? ErrorCode::ScenarioInvalid : diagnostics.front().code, summarize(diagnostics)),
      diagnostics_(std::move(diagnostics)) {}

}  // namespace evc
