#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nexcv {

// Base for every error raised by the harness. Callers that only need a
// message catch this; callers that branch on the cause catch the subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset file could not be read or a record violated the record schema.
// line() is 1-based and 0 when the error is not tied to a line.
class DatasetError : public Error {
 public:
  DatasetError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class ClassifierError : public Error {
 public:
  using Error::Error;
};

// Failure of an external classifier process.
class AdapterError : public ClassifierError {
 public:
  enum class Kind { ProcessExit, Protocol, Timeout, Engine };

  AdapterError(Kind kind, const std::string& what) : ClassifierError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Wraps a failure inside one evaluation retry or fold.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, int retry) : Error(what), retry_(retry) {}

  int retry() const noexcept { return retry_; }

 private:
  int retry_;
};

}  // namespace nexcv
