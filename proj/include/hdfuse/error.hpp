#pragma once

// Error taxonomy shared across the library. The CLI maps these onto its
// stable exit codes: UsageError -> 1, DataError/TrainingError -> 2.

#include <stdexcept>
#include <string>

namespace hdfuse {

/// Caller violated a precondition (bad dimension, out-of-order access, ...).
struct UsageError : std::invalid_argument {
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Input data is malformed or unusable (CSV parse failures, empty folds, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Training cannot proceed (e.g. a class with no samples).
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hdfuse
