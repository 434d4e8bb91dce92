#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace awt {

enum class Errc {
  InvalidArgument,
  ZeroNormRow,
  DimensionMismatch,
  ShapeMismatch,
  InvalidTemperature,
  TooFewClasses,
  EmptyClassSet,
  NumericalOverflow,
  SizeLimitExceeded,
  InsufficientViews,
  UnknownId,
  // io
  IoError,
  BadMagic,
  UnsupportedDtype,
  UnsupportedOrder,
  UnsupportedShape,
  TruncatedPayload,
  SchemaError,
  ManifestError,
  // prompting
  UnparseableReply,
  MissingPlaceholder,
  ClientError,
  QuotaExhausted,
};

std::string_view to_string(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string &detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code), detail_(detail) {}

  Errc code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string &detail() const noexcept { return detail_; }

private:
  Errc code_;
  std::string detail_;
};

} // namespace awt
