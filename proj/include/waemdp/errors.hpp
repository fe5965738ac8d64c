#pragma once

#include <stdexcept>
#include <string>

namespace waemdp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WAEMDP_DEFINE_ERROR(Name)              \
  class Name : public Error {                  \
   public:                                     \
    explicit Name(const std::string& what)     \
        : Error(std::string(#Name ": ") + what) {} \
  }

WAEMDP_DEFINE_ERROR(InvalidAction);
WAEMDP_DEFINE_ERROR(NotErgodic);
WAEMDP_DEFINE_ERROR(NonPositiveTemperature);
WAEMDP_DEFINE_ERROR(DimensionMismatch);
WAEMDP_DEFINE_ERROR(ShapeMismatch);
WAEMDP_DEFINE_ERROR(CycleDetected);
WAEMDP_DEFINE_ERROR(NonScalarLoss);
WAEMDP_DEFINE_ERROR(EmptyBatch);
WAEMDP_DEFINE_ERROR(DivergenceDetected);
WAEMDP_DEFINE_ERROR(DomainError);
WAEMDP_DEFINE_ERROR(NotConverged);
WAEMDP_DEFINE_ERROR(BudgetExceeded);
WAEMDP_DEFINE_ERROR(InsufficientSamples);
WAEMDP_DEFINE_ERROR(PolicyMismatch);
WAEMDP_DEFINE_ERROR(ParseError);
WAEMDP_DEFINE_ERROR(ConfigError);
WAEMDP_DEFINE_ERROR(RewardOutOfRange);

#undef WAEMDP_DEFINE_ERROR

}  // namespace waemdp
