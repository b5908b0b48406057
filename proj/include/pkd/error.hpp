#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pkd {

enum class Errc {
  MissingColumn,
  ParseError,
  EmptyDataset,
  DimensionMismatch,
  InvalidFraction,
  DegenerateClass,
  ConfigError,
  InvalidArchitecture,
  EmptyBatch,
  NonFiniteLoss,
  InvalidHyperparameter,
  InvalidFolds,
  InvalidK,
  TooFewPoints,
  InconsistentInput,
  LengthMismatch,
  InvalidCounts,
  InvalidP,
  TargetNotSubset,
  EmptySet,
  Empty,
  IoError,
  UnsupportedVersion,
  MalformedModel,
  UsageError,
};

std::string_view to_string(Errc code);

// Process exit code for a failure of this kind: 2 usage, 3 data, 4 numeric.
int exit_code(Errc code);

// Every library failure is reported as a pkd::Error. what() reads "<Kind>: <detail>",
// prefixed with "<stage>: " when raised from a pipeline stage.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);
  Error(std::string_view stage, const Error& inner);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace pkd
