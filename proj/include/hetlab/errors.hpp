#pragma once

#include <stdexcept>
#include <string>

namespace hetlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operators (or an operator and a projector) live on different bases.
class BasisMismatch : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

enum class MatrixFunctionFailure { BranchCut, IllConditioned, Singular };

inline const char* to_string(MatrixFunctionFailure f) {
  switch (f) {
    case MatrixFunctionFailure::BranchCut: return "BranchCut";
    case MatrixFunctionFailure::IllConditioned: return "IllConditioned";
    case MatrixFunctionFailure::Singular: return "Singular";
  }
  return "Unknown";
}

/// Raised when a spectral matrix function cannot be evaluated reliably.
/// `value()` carries the offending quantity: an eigenvalue phase for
/// BranchCut, the eigenvector condition number for IllConditioned, the
/// smallest eigenvalue modulus for Singular.
class MatrixFunctionError : public Error {
 public:
  MatrixFunctionError(MatrixFunctionFailure failure, double value, const std::string& what)
      : Error(std::string(to_string(failure)) + ": " + what), failure_(failure), value_(value) {}

  MatrixFunctionFailure failure() const { return failure_; }
  double value() const { return value_; }

 private:
  MatrixFunctionFailure failure_;
  double value_;
};

}  // namespace hetlab
