#pragma once

#include <stdexcept>
#include <string>

namespace mvkt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or width disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid argument that is not a shape problem (bad label, fully masked row, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

enum class DataErrorKind {
  kMissingFile,
  kRaggedRow,
  kNonNumeric,
  kSampleCountMismatch,
  kSampleIdMismatch,
  kBadLabel,
  kBadMeta,
  kZeroRow,
  kInvalid,
};

const char* to_string(DataErrorKind kind);

class DataError : public Error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  DataErrorKind kind() const { return kind_; }

 private:
  DataErrorKind kind_;
};

// Non-finite loss or value encountered during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline const char* to_string(DataErrorKind kind) {
  switch (kind) {
    case DataErrorKind::kMissingFile: return "missing file";
    case DataErrorKind::kRaggedRow: return "ragged row";
    case DataErrorKind::kNonNumeric: return "non-numeric cell";
    case DataErrorKind::kSampleCountMismatch: return "sample-count mismatch";
    case DataErrorKind::kSampleIdMismatch: return "sample-id mismatch";
    case DataErrorKind::kBadLabel: return "bad label";
    case DataErrorKind::kBadMeta: return "bad meta";
    case DataErrorKind::kZeroRow: return "zero row";
    case DataErrorKind::kInvalid: return "invalid data";
  }
  return "data error";
}

}  // namespace mvkt
