#pragma once

#include <stdexcept>
#include <string>

namespace alirector {

// Base class for every error raised by the library. Each subclass maps onto
// one failure category so the CLI can translate it into an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value or missing template / preset.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message names the offending line.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's precondition (shape or length mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Sequence longer than the model's positional capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Token id outside the model vocabulary, or an unknown symbol.
class VocabError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage was started before the stage producing its input.
class DependencyError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Frozen teacher parameters changed during student training.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace alirector
