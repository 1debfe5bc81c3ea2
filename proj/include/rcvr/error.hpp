#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rcvr {

enum class ErrorCode {
  MalformedSyntax,
  InvariantViolation,
  VersionUnsupported,
  TooShort,
  DegenerateGeometry,
  EmptyFit,
  EmptyInput,
  TooFewGroups,
  InvalidConfig,
  MissingInput,
  EmptySequence,
  EmptyTrainingSet,
  DivergenceDetected,
  MalformedModel,
  GenerationFailed,
  ConfigInfeasible,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every domain failure in the library is reported through this type.
// `index` carries the offending element (point, rating, ...) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::optional<std::size_t> index_;
};

}  // namespace rcvr
