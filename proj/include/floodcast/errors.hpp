#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace floodcast {

// Base of every error the library raises. Callers that only need to report
// can catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid settings: even kernel sizes, zero patience, empty datasets, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's contract (non-scalar backward root, length mismatch).
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A metric that has no value for the given input (empty confusion matrix,
// PR curve without positives).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// A sample window that the trace does not fully cover.
class WindowError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Failure to read back a binary artifact (model or packed dataset).
class LoadError : public IoError {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, ShapeInconsistent };

  LoadError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class DivergenceError : public NumericError {
 public:
  DivergenceError(int epoch, int batch, const std::string& what)
      : NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int epoch_;
  int batch_;
};

class SimulationDivergenceError : public NumericError {
 public:
  SimulationDivergenceError(std::size_t step, const std::string& what)
      : NumericError("simulation diverged at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace floodcast
