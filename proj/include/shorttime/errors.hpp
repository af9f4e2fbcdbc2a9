#pragma once

#include <stdexcept>
#include <string>

namespace shorttime {

// Base of everything the library throws on contract violations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed lattice, shape mismatch, wrong dimension, bad axis.
class LatticeError : public Error {
 public:
  using Error::Error;
};

// Band does not fit the lattice or is empty.
class BandError : public Error {
 public:
  using Error::Error;
};

// A product would produce modes the target grid cannot represent.
class AliasingError : public Error {
 public:
  using Error::Error;
};

// Quadrature, sampling or path requirements not met.
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Solver step guard or blow-up guard tripped.
class SolverError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace shorttime
