#pragma once

#include <stdexcept>
#include <string>

namespace intent_miner {

// Bad input data or arguments. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed JSON or JSONL; carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Layer or tensor shape mismatch in the head network.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system failures. CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Embedding sidecar unreachable or timed out. CLI exit code 2.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sidecar replied with something that violates the wire protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace intent_miner
