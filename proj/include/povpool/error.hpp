#pragma once

#include <stdexcept>
#include <string>

namespace povpool {

// Every failure the toolkit can raise, grouped by exit class:
//   1 = I/O (unreadable or malformed inputs)
//   2 = parameter (values outside their documented domain)
//   3 = pipeline integrity (stages disagree about the data)
enum class Errc {
  IoError,
  MetaMissing,
  SourceGap,
  ParseError,
  BadParameter,
  EmptyWindow,
  EmptySequence,
  EmptyBatch,
  PromptError,
  DimMismatch,
  ZeroVector,
  TruncatedClip,
  DimensionMismatch,
  WeightMismatch,
  IncompletePipeline,
  ShapeError,
};

const char* errc_name(Errc code);

// Process exit status for a given error class.
int errc_exit_code(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace povpool
