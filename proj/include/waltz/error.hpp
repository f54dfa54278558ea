#pragma once

#include <stdexcept>
#include <string>

namespace waltz {

// Every library error derives from Error. InputError covers bad files and
// bad user data; the CLI maps it to a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

#define WALTZ_DEFINE_ERROR(Name, Base)  \
  class Name : public Base {            \
   public:                              \
    using Base::Base;                   \
  };

WALTZ_DEFINE_ERROR(UnknownLabel, InputError)
WALTZ_DEFINE_ERROR(InvalidDistribution, InputError)
WALTZ_DEFINE_ERROR(InvalidSample, InputError)
WALTZ_DEFINE_ERROR(MalformedRow, InputError)
WALTZ_DEFINE_ERROR(NonMonotonicTime, InputError)
WALTZ_DEFINE_ERROR(MissingAxis, InputError)
WALTZ_DEFINE_ERROR(FileNotFound, InputError)
WALTZ_DEFINE_ERROR(SchemaError, InputError)
WALTZ_DEFINE_ERROR(ConfigError, InputError)
WALTZ_DEFINE_ERROR(InsufficientData, InputError)
WALTZ_DEFINE_ERROR(EmptyWindow, InputError)
WALTZ_DEFINE_ERROR(ImpossibleTransitionInData, InputError)
WALTZ_DEFINE_ERROR(LengthMismatch, Error)
WALTZ_DEFINE_ERROR(DegenerateFit, Error)
WALTZ_DEFINE_ERROR(TooFewDances, Error)

#undef WALTZ_DEFINE_ERROR

}  // namespace waltz
