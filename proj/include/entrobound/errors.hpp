#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entrobound {

// Every failure raised by the library derives from Error. kind() is the
// stable tag used in reports and CSV rows.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define ENTROBOUND_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(#Name, what) {}      \
  };

ENTROBOUND_DEFINE_ERROR(DomainError)
ENTROBOUND_DEFINE_ERROR(ConvergenceError)
ENTROBOUND_DEFINE_ERROR(NonFiniteError)
ENTROBOUND_DEFINE_ERROR(ValidationError)
ENTROBOUND_DEFINE_ERROR(ArityError)
ENTROBOUND_DEFINE_ERROR(DimensionError)
ENTROBOUND_DEFINE_ERROR(UnsupportedError)
ENTROBOUND_DEFINE_ERROR(DegenerateError)
ENTROBOUND_DEFINE_ERROR(NegativeFunctionError)
ENTROBOUND_DEFINE_ERROR(ZeroDensityError)
ENTROBOUND_DEFINE_ERROR(NonMartingaleError)
ENTROBOUND_DEFINE_ERROR(NegativeValueError)
ENTROBOUND_DEFINE_ERROR(VarianceError)
ENTROBOUND_DEFINE_ERROR(SupportError)
ENTROBOUND_DEFINE_ERROR(ConfigError)
ENTROBOUND_DEFINE_ERROR(MissingSeriesError)

#undef ENTROBOUND_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error("ParseError", what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SymmetryViolationError : public Error {
 public:
  SymmetryViolationError(const std::string& what, double worst_t)
      : Error("SymmetryViolationError", what), worst_t_(worst_t) {}
  double worst_t() const noexcept { return worst_t_; }

 private:
  double worst_t_;
};

}  // namespace entrobound
