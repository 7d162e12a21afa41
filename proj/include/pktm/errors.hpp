#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pktm {

// Root of every error the library throws. Callers that only need a
// message can catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument outside the mathematical domain of an operation
// (non-positive velocity, zero counts, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

// Inconsistent operands, e.g. a grid whose bin count disagrees with the
// offset binning it is paired with.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Structured file-format failures. `offset` is the byte position at which
// the reader gave up.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class CorruptionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Semantically invalid input that parsed fine (non-increasing knots, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A caller broke an ordering or uniqueness precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Distributed job failure: lost workers, exhausted retries, spill I/O.
class JobError : public Error {
 public:
  using Error::Error;
};

}  // namespace pktm
