#ifndef ANTILEARN_ERROR_HPP
#define ANTILEARN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace antilearn {

enum class ErrorCode {
  Generic,
  ConfigInvalid,
  ChecksumMismatch,
  ShapeMismatch,
  UnsupportedNorm,
  CorruptArtifact,
  MetadataMissing,
  MissingArrayEntry,
  MultiLabelUnsupported,
  UnpairedImage,
  NonBinaryMask,
  IncompatibleDims,
  NonFiniteLoss,
  TaskMismatch,
  MismatchedRuns,
  WeakSurrogate,
  SegmentationUnsupported,
  NoConvergence,
  IoFailure,
};

const char* to_string(ErrorCode code);

// Process exit code for the CLI. Codes named in the CLI contract get
// stable values; everything else maps to 1.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace antilearn

#endif
