#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sheafcx {

enum class Errc {
  NotPrime,
  ZeroArgument,
  BudgetExceeded,
  AmbientMismatch,
  Unstable,
  BadOrder,
  MissingData,
  WrongAmbient,
  UnsupportedDimension,
  BadParams,
  NegativityViolation,
  NotWeightPure,
  NumericUnsupported,
  Parse,
  Domain,
  Io,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::NotPrime: return "NotPrime";
    case Errc::ZeroArgument: return "ZeroArgument";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::AmbientMismatch: return "AmbientMismatch";
    case Errc::Unstable: return "Unstable";
    case Errc::BadOrder: return "BadOrder";
    case Errc::MissingData: return "MissingData";
    case Errc::WrongAmbient: return "WrongAmbient";
    case Errc::UnsupportedDimension: return "UnsupportedDimension";
    case Errc::BadParams: return "BadParams";
    case Errc::NegativityViolation: return "NegativityViolation";
    case Errc::NotWeightPure: return "NotWeightPure";
    case Errc::NumericUnsupported: return "NumericUnsupported";
    case Errc::Parse: return "ParseError";
    case Errc::Domain: return "DomainError";
    case Errc::Io: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Parse failure with a byte span into the source text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::size_t length)
      : Error(Errc::Parse, what), offset_(offset), length_(length == 0 ? 1 : length) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t length() const noexcept { return length_; }

  /// Two-line diagnostic: the source and a caret line under the span.
  std::string render(const std::string& source) const {
    std::string out = source + "\n";
    out += std::string(offset_ < source.size() ? offset_ : source.size(), ' ');
    out += std::string(length_, '^');
    out += "\n";
    out += what();
    return out;
  }

 private:
  std::size_t offset_;
  std::size_t length_;
};

}  // namespace sheafcx
