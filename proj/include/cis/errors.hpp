#pragma once

#include <stdexcept>
#include <string>

namespace cis {

// Base class for every error raised by the library. Each subclass maps onto
// one failure mode that callers (notably the CLI) distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A functional table (f or σ/μ) is not defined on part of its domain.
class MissingEntry : public Error {
 public:
  using Error::Error;
};

// A probability vector is negative somewhere or does not sum to one.
class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// An enumeration (prescriptions, strategies, trajectory branches) is larger
// than the configured cap.
class SizeOverflow : public Error {
 public:
  using Error::Error;
};

// Brute-force oracle refused to run because the count exceeds its cap.
class Infeasible : public SizeOverflow {
 public:
  using SizeOverflow::SizeOverflow;
};

class ZeroProbabilityObservation : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

// A policy has no entry for information that was actually realized.
class UnreachableInformation : public Error {
 public:
  using Error::Error;
};

}  // namespace cis
