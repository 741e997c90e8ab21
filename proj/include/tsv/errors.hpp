#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsv {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& where, std::size_t lhs, std::size_t rhs)
      : Error(where + ": dimension mismatch (" + std::to_string(lhs) + " vs " +
              std::to_string(rhs) + ")") {}
};

// A precondition on argument values was violated (bad dim, non-unitary, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Every history has zero weight, so conditioning on the final state is void.
class ImpossiblePostSelection : public Error {
 public:
  ImpossiblePostSelection() : Error("impossible post-selection: all histories have zero weight") {}
};

// Projection annihilates the state it is asked to collapse.
class EmptyBranch : public Error {
 public:
  EmptyBranch() : Error("branch has no support") {}
};

class EnumerationCapExceeded : public Error {
 public:
  EnumerationCapExceeded(std::size_t required, std::size_t cap)
      : Error("history enumeration needs a cap of at least " + std::to_string(required) +
              " (configured cap " + std::to_string(cap) + ")"),
        required_(required),
        cap_(cap) {}

  std::size_t required() const noexcept { return required_; }
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t required_;
  std::size_t cap_;
};

}  // namespace tsv
