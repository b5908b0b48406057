#include "pkd/error.hpp"

namespace pkd {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidFraction: return "InvalidFraction";
    case Errc::DegenerateClass: return "DegenerateClass";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InvalidArchitecture: return "InvalidArchitecture";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::InvalidHyperparameter: return "InvalidHyperparameter";
    case Errc::InvalidFolds: return "InvalidFolds";
    case Errc::InvalidK: return "InvalidK";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::InconsistentInput: return "InconsistentInput";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InvalidCounts: return "InvalidCounts";
    case Errc::InvalidP: return "InvalidP";
    case Errc::TargetNotSubset: return "TargetNotSubset";
    case Errc::EmptySet: return "EmptySet";
    case Errc::Empty: return "Empty";
    case Errc::IoError: return "IoError";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::MalformedModel: return "MalformedModel";
    case Errc::UsageError: return "UsageError";
  }
  return "Unknown";
}

int exit_code(Errc code) {
  switch (code) {
    case Errc::UsageError:
    case Errc::ConfigError:
    case Errc::InvalidFraction:
    case Errc::InvalidArchitecture:
    case Errc::InvalidHyperparameter:
    case Errc::InvalidFolds:
    case Errc::InvalidK:
      return 2;
    case Errc::NonFiniteLoss:
      return 4;
    default:
      return 3;
  }
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(detail) {}

Error::Error(std::string_view stage, const Error& inner)
    : std::runtime_error(std::string(stage) + ": " + inner.what()),
      code_(inner.code()),
      detail_(inner.detail()) {}

}  // namespace pkd
