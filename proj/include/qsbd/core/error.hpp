#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qsbd {

enum class ErrorKind {
  kParse,
  kDimensionMismatch,
  kDegeneratePolygon,
  kEmptyTable,
  kUnsupportedGeometry,
  kManifestMismatch,
  kShapeMismatch,
  kChecksumMismatch,
  kConfigMismatch,
  kMissingModality,
  kLengthMismatch,
  kSingleClassTrainSet,
  kDivergedLoss,
  kSingleClassEvalSet,
  kEmptyConfusion,
  kTooFewPerClass,
  kSingleCity,
  kPlacementOverflow,
  kInvalidArgument,
  kIo,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kDegeneratePolygon: return "DegeneratePolygon";
    case ErrorKind::kEmptyTable: return "EmptyTable";
    case ErrorKind::kUnsupportedGeometry: return "UnsupportedGeometry";
    case ErrorKind::kManifestMismatch: return "ManifestMismatch";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::kConfigMismatch: return "ConfigMismatch";
    case ErrorKind::kMissingModality: return "MissingModality";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kSingleClassTrainSet: return "SingleClassTrainSet";
    case ErrorKind::kDivergedLoss: return "DivergedLoss";
    case ErrorKind::kSingleClassEvalSet: return "SingleClassEvalSet";
    case ErrorKind::kEmptyConfusion: return "EmptyConfusion";
    case ErrorKind::kTooFewPerClass: return "TooFewPerClass";
    case ErrorKind::kSingleCity: return "SingleCity";
    case ErrorKind::kPlacementOverflow: return "PlacementOverflow";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

// Process exit code namespace: 1 parse, 2 config, 3 runtime, 4 numeric divergence.
constexpr int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
    case ErrorKind::kDimensionMismatch:
    case ErrorKind::kUnsupportedGeometry:
    case ErrorKind::kManifestMismatch:
    case ErrorKind::kChecksumMismatch:
      return 1;
    case ErrorKind::kConfigMismatch:
    case ErrorKind::kMissingModality:
    case ErrorKind::kInvalidArgument:
      return 2;
    case ErrorKind::kDivergedLoss:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace qsbd
