#include "defkit/core.hpp"

namespace defkit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::ImageTooSmall: return "ImageTooSmall";
    case ErrorKind::EstimatorFailure: return "EstimatorFailure";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::Truncated: return "Truncated";
    case ErrorKind::TrailingData: return "TrailingData";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::ComponentMismatch: return "ComponentMismatch";
    case ErrorKind::LineOutOfBounds: return "LineOutOfBounds";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

const char* to_string(RangeBucket bucket) {
  switch (bucket) {
    case RangeBucket::VerySmall: return "very_small";
    case RangeBucket::Small: return "small";
    case RangeBucket::Medium: return "medium";
  }
  return "unknown";
}

RangeBucket parse_range_bucket(const std::string& name) {
  if (name == "very_small") return RangeBucket::VerySmall;
  if (name == "small") return RangeBucket::Small;
  if (name == "medium") return RangeBucket::Medium;
  throw Error(ErrorKind::ConfigInvalid, "unknown range bucket '" + name + "'");
}

RangeBucket classify_magnitude(double m) {
  if (!std::isfinite(m) || m < 0.0) throw Error(ErrorKind::InvalidValue, "magnitude must be finite and >= 0");
  if (m < 1.0) return RangeBucket::VerySmall;
  if (m <= 5.0) return RangeBucket::Small;
  if (m <= 15.0) return RangeBucket::Medium;
  throw Error(ErrorKind::OutOfRange, "max displacement " + std::to_string(m) + " px exceeds 15 px");
}

RangeBucket classify_range(const DisplacementField& df) { return classify_magnitude(field_magnitude_max(df)); }

}  // namespace defkit
