#pragma once

#include <stdexcept>
#include <string>

namespace rotape {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct BasisError : Error {
  using Error::Error;
};

struct OverflowError : std::range_error {
  using std::range_error::range_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct HypothesisError : Error {
  using Error::Error;
};

struct FitError : Error {
  using Error::Error;
};

// Raised when a tendency term produces NaN or Inf.
struct NonFiniteError : Error {
  std::string term;
  explicit NonFiniteError(const std::string& t)
      : Error("non-finite value in term '" + t + "'"), term(t) {}
};

// Step rejected by the advective CFL test; carries a usable step size.
struct CflError : Error {
  double courant;
  double suggested_dt;
  CflError(double c, double dt)
      : Error("CFL violation: courant=" + std::to_string(c) +
              ", suggested dt=" + std::to_string(dt)),
        courant(c),
        suggested_dt(dt) {}
};

}  // namespace rotape
