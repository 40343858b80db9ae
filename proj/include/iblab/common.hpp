#ifndef IBLAB_COMMON_HPP
#define IBLAB_COMMON_HPP

#include <stdexcept>
#include <string>

namespace iblab {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid values in caller-supplied data (non-finite entries, bad ranges,
// dimension mismatches).
class InputDomainError : public Error {
 public:
  using Error::Error;
};

// A Partition that violates its invariants (empty class, index out of range).
class PartitionError : public Error {
 public:
  using Error::Error;
};

// Numerical failure inside an algorithm (factorization breakdown, NaN loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent external files (IDX, CSV, trace directories).
class FormatError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kLn2 = 0.693147180559945309417232121458;

inline double nats_to_bits(double nats) { return nats / kLn2; }

}  // namespace iblab

#endif  // IBLAB_COMMON_HPP
