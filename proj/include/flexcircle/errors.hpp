#pragma once

#include <stdexcept>
#include <string>

namespace flexcircle {

// Base of every library error. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Raised when a computation cannot be resolved at the configured scale.
class InconclusiveAtScale : public Error {
 public:
  using Error::Error;
};

#define FLEXCIRCLE_ERROR(Name, Base)            \
  class Name : public Base {                    \
   public:                                      \
    explicit Name(const std::string& what)      \
        : Base(std::string(#Name ": ") + what) {} \
  };

FLEXCIRCLE_ERROR(AmbiguousClass, InconclusiveAtScale)
FLEXCIRCLE_ERROR(IdentityInput, ValidationError)
FLEXCIRCLE_ERROR(FieldMismatch, ValidationError)
FLEXCIRCLE_ERROR(ParseError, ValidationError)
FLEXCIRCLE_ERROR(UnknownGenerator, ValidationError)
FLEXCIRCLE_ERROR(UnsupportedVertexGroup, ValidationError)
FLEXCIRCLE_ERROR(BallTooLarge, ValidationError)
FLEXCIRCLE_ERROR(BasepointDegenerate, InconclusiveAtScale)
FLEXCIRCLE_ERROR(NotLiftable, ValidationError)
FLEXCIRCLE_ERROR(NotSemiConjugateAtScale, InconclusiveAtScale)
FLEXCIRCLE_ERROR(InexactInput, ValidationError)
FLEXCIRCLE_ERROR(ConstantTrace, ValidationError)
FLEXCIRCLE_ERROR(PreconditionFailed, ValidationError)
FLEXCIRCLE_ERROR(CertificationFailedAtResolution, InconclusiveAtScale)
FLEXCIRCLE_ERROR(ParameterNotInCentralizer, ValidationError)
FLEXCIRCLE_ERROR(ExactModeRequired, ValidationError)
FLEXCIRCLE_ERROR(NoSolutionInWindow, InconclusiveAtScale)
FLEXCIRCLE_ERROR(SearchExhausted, InconclusiveAtScale)
FLEXCIRCLE_ERROR(NonIsolatedAtScale, InconclusiveAtScale)
FLEXCIRCLE_ERROR(WitnessNotFound, InconclusiveAtScale)

#undef FLEXCIRCLE_ERROR

}  // namespace flexcircle
