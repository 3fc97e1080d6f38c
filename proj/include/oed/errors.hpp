#pragma once

#include <stdexcept>
#include <string>

namespace oed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  /// Short machine-readable tag, e.g. "NonpositiveNoise".
  virtual const char* kind() const noexcept { return "Error"; }
};

#define OED_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(what) {}         \
    const char* kind() const noexcept override { return #Name; }    \
  }

OED_DEFINE_ERROR(ConfigError);
OED_DEFINE_ERROR(DimensionMismatch);
OED_DEFINE_ERROR(NonpositiveNoise);
OED_DEFINE_ERROR(NonfiniteObjective);
OED_DEFINE_ERROR(InfeasibleStart);
OED_DEFINE_ERROR(EmptyShrunkenBox);
OED_DEFINE_ERROR(NonfiniteIntegrand);
OED_DEFINE_ERROR(ZeroDenominator);
OED_DEFINE_ERROR(NonfiniteStart);
OED_DEFINE_ERROR(EmptyChain);
OED_DEFINE_ERROR(AllMinusInfinity);
OED_DEFINE_ERROR(StepFailure);
OED_DEFINE_ERROR(NoPeak);
OED_DEFINE_ERROR(ParseError);

#undef OED_DEFINE_ERROR

}  // namespace oed
