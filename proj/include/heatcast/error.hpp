#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heatcast {

enum class ErrorCode {
  MissingColumn,
  EmptyInput,
  DegenerateDesign,
  DomainError,
  EmptySample,
  ShapeMismatch,
  SingleIterationStall,
  ZeroInfluence,
  UnknownFeature,
  TooShort,
  Degenerate,
  AlphaTooSmall,
  UnboundedRegion,
  LengthMismatch,
  ConstantSample,
  InvalidArgument,
  ParseError,
  IoError,
  NetworkError,
  UnknownStation,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace heatcast
