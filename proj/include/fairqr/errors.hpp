#pragma once

#include <stdexcept>
#include <string>

namespace fairqr {

// Base class for every failure the library raises on purpose.
// The CLI maps subclasses onto process exit codes (see tools/fairqr.cpp).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad shapes, non-finite values, malformed files, out-of-range categories.
struct DataError : Error {
  using Error::Error;
};

// Design matrix columns are linearly dependent at the rank tolerance.
struct SingularDesignError : DataError {
  using DataError::DataError;
};

// A declared protected-attribute category has no observations.
struct EmptyGroupError : DataError {
  using DataError::DataError;
};

// The interior-point loop hit max_iterations above the gap tolerance.
struct ConvergenceError : Error {
  double last_gap;
  ConvergenceError(const std::string& what, double gap) : Error(what), last_gap(gap) {}
};

// An oracle was asked for an instance beyond its hard size guard.
struct SizeGuardError : Error {
  using Error::Error;
};

// Unusable command line or config file.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace fairqr
