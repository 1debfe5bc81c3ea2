#include "rcvr/error.hpp"

namespace rcvr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedSyntax: return "MalformedSyntax";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::EmptyFit: return "EmptyFit";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::ConfigInfeasible: return "ConfigInfeasible";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& message, std::optional<std::size_t> index) {
  std::string out(to_string(code));
  out += ": ";
  out += message;
  if (index) {
    out += " (index ";
    out += std::to_string(*index);
    out += ")";
  }
  return out;
}
}  // namespace

Error::Error(ErrorCode code, std::string message, std::optional<std::size_t> index)
    : std::runtime_error(compose(code, message, index)),
      code_(code),
      detail_(std::move(message)),
      index_(index) {}

}  // namespace rcvr
