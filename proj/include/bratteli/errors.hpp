#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace bratteli {

// Error categories; the CLI maps them onto process exit codes.
enum class ErrorKind { Validation = 1, CapExceeded = 2, Parse = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::string msg)
      : Error(ErrorKind::Validation, std::move(msg)) {}
};

class CapExceededError : public Error {
 public:
  explicit CapExceededError(std::string msg)
      : Error(ErrorKind::CapExceeded, std::move(msg)) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(std::string msg)
      : Error(ErrorKind::Parse, std::move(msg)) {}
};

#define BRATTELI_VALIDATION_ERROR(NAME)                 \
  class NAME : public ValidationError {                 \
   public:                                              \
    explicit NAME(std::string msg)                      \
        : ValidationError(std::move(msg)) {}            \
  }

// Diagram construction / regularity.
BRATTELI_VALIDATION_ERROR(EmptyLevelError);
BRATTELI_VALIDATION_ERROR(EmptyMultisetError);
BRATTELI_VALIDATION_ERROR(OrphanVertexError);
BRATTELI_VALIDATION_ERROR(NotRegularError);

// PMFs and sources.
BRATTELI_VALIDATION_ERROR(LevelMismatchError);
BRATTELI_VALIDATION_ERROR(WeightSumError);
BRATTELI_VALIDATION_ERROR(NotStationaryError);
BRATTELI_VALIDATION_ERROR(NoSamplerError);
BRATTELI_VALIDATION_ERROR(ZeroProbabilityError);

// Coding.
BRATTELI_VALIDATION_ERROR(MissingOrderError);
BRATTELI_VALIDATION_ERROR(InvalidCodewordError);
BRATTELI_VALIDATION_ERROR(TruncatedInputError);

// Grids.
BRATTELI_VALIDATION_ERROR(OutOfDomainError);
BRATTELI_VALIDATION_ERROR(NotAdmissibleError);

// Adic arithmetic and path dynamics.
BRATTELI_VALIDATION_ERROR(RangeError);
BRATTELI_VALIDATION_ERROR(MismatchError);
BRATTELI_VALIDATION_ERROR(FinalAddressError);
BRATTELI_VALIDATION_ERROR(FinalPathError);
BRATTELI_VALIDATION_ERROR(TruncationTooShallowError);
BRATTELI_VALIDATION_ERROR(BudgetError);

// Lossy bounds.
BRATTELI_VALIDATION_ERROR(UnknownRateError);

#undef BRATTELI_VALIDATION_ERROR

}  // namespace bratteli
