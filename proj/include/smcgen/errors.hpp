#pragma once

#include <stdexcept>
#include <string>

namespace smcgen {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map whole families of problems onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SMCGEN_DEFINE_ERROR(Name)                         \
  class Name : public Error {                             \
   public:                                                \
    explicit Name(const std::string& what) : Error(what) {} \
  }

SMCGEN_DEFINE_ERROR(InvalidModel);
SMCGEN_DEFINE_ERROR(UnknownModel);
SMCGEN_DEFINE_ERROR(InvalidArgument);
SMCGEN_DEFINE_ERROR(NonPositiveWeight);
SMCGEN_DEFINE_ERROR(DuplicateLabel);
SMCGEN_DEFINE_ERROR(LabelOutOfRange);
SMCGEN_DEFINE_ERROR(ArityTooLarge);
SMCGEN_DEFINE_ERROR(DegenerateSurvival);
SMCGEN_DEFINE_ERROR(HorizonExceeded);
SMCGEN_DEFINE_ERROR(TooLarge);
SMCGEN_DEFINE_ERROR(OutOfRange);
SMCGEN_DEFINE_ERROR(BadArity);
SMCGEN_DEFINE_ERROR(NotStochastic);
SMCGEN_DEFINE_ERROR(TooFewSamples);
SMCGEN_DEFINE_ERROR(ConfigError);
SMCGEN_DEFINE_ERROR(InvariantViolation);

#undef SMCGEN_DEFINE_ERROR

}  // namespace smcgen
