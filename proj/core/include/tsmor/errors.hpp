#pragma once

#include <stdexcept>
#include <string>

namespace tsmor {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent matrix dimensions or malformed structure.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Evaluation point too close to a pole.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Sylvester equation without a unique solution (overlapping spectra).
class UniquenessError : public Error {
 public:
  using Error::Error;
};

// Matrix that must be inverted fails the condition gate.
class InvertibilityError : public Error {
 public:
  using Error::Error;
};

// Generator construction violates an assumption (disjointness, order).
class AssumptionError : public Error {
 public:
  using Error::Error;
};

// Bad user input: unreadable file, parse failure, invalid parameter.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsmor
