#pragma once

#include <stdexcept>
#include <string>

namespace csqn {

// Shape disagreement between operands; the message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. line() is 1-based and also appears in the message.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

// API misuse, e.g. backward through an already-consumed operation record.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A gradient-check precondition failed (non-deterministic objective).
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csqn
