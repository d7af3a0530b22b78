#pragma once

#include <stdexcept>
#include <string>

namespace fogsound {

enum class errc {
  not_found,
  malformed_header,
  unsupported_format,
  io_failure,
  invalid_frame_size,
  invalid_class,
  empty_dataset,
  empty_clip,
  invalid_range,
  invalid_length,
  wrong_dimension,
  dimension_mismatch,
  divergence_detected,
  too_small,
  version_mismatch,
  corrupt_model,
  unknown_preset,
  invalid_config,
  malformed_timeline,
  unknown_kind,
  length_mismatch,
  truncated,
  bind_failure,
  connect_failure,
  timeout,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::not_found: return "NotFound";
    case errc::malformed_header: return "MalformedHeader";
    case errc::unsupported_format: return "UnsupportedFormat";
    case errc::io_failure: return "IoFailure";
    case errc::invalid_frame_size: return "InvalidFrameSize";
    case errc::invalid_class: return "InvalidClass";
    case errc::empty_dataset: return "EmptyDataset";
    case errc::empty_clip: return "EmptyClip";
    case errc::invalid_range: return "InvalidRange";
    case errc::invalid_length: return "InvalidLength";
    case errc::wrong_dimension: return "WrongDimension";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::divergence_detected: return "DivergenceDetected";
    case errc::too_small: return "TooSmall";
    case errc::version_mismatch: return "VersionMismatch";
    case errc::corrupt_model: return "CorruptModel";
    case errc::unknown_preset: return "UnknownPreset";
    case errc::invalid_config: return "InvalidConfig";
    case errc::malformed_timeline: return "MalformedTimeline";
    case errc::unknown_kind: return "UnknownKind";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::truncated: return "Truncated";
    case errc::bind_failure: return "BindFailure";
    case errc::connect_failure: return "ConnectFailure";
    case errc::timeout: return "Timeout";
  }
  return "Unknown";
}

/// Single exception type carrying a stable error code; what() includes the
/// code name so CLI output stays greppable.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace fogsound
