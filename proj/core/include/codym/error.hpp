#pragma once

#include <stdexcept>
#include <string>

namespace codym {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text (bad JSON line, bad term-list line, ...).
struct ParseError : Error {
  using Error::Error;
};

// Structurally valid input that violates the transcript schema.
struct SchemaError : Error {
  using Error::Error;
};

// Values out of range, broken invariants, degenerate statistics.
struct ValidationError : Error {
  using Error::Error;
};

// Operation requires data the input does not carry (e.g. word-level
// analysis on a counts-only transcript).
struct UnsupportedInputError : Error {
  using Error::Error;
};

}  // namespace codym
