#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evc {

enum class ErrorCode {
  ParseError,
  InvalidValue,
  UnknownSite,
  UnknownNode,
  QuotaInfeasible,
  NoPublicIpAtFrontEnd,
  BadBounds,
  SubnetOverlap,
  NoPublicIpAvailable,
  EmptyPlacement,
  PrefixExhausted,
  UnassignedAddresses,
  Unreachable,
  NoBackupCentralPoint,
  DuplicateSubject,
  NoEligibleSite,
  QuotaExceeded,
  InvalidUpdate,
  ScenarioInvalid,
  NonTermination,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Diagnostic {
  ErrorCode code;
  std::string message;
};

/// Carries every violation found; code() reports the first one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

}  // namespace evc
