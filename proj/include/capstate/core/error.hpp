#pragma once

#include <stdexcept>
#include <string>

namespace capstate {

// Broad failure classes; the CLI maps each to a process exit code.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Invalid parameters or configuration (bad cutoff, bad window plan, ...).
class ParameterError : public Error {
public:
  explicit ParameterError(const std::string &what)
      : Error(ErrorKind::Config, what) {}
};

// Malformed, missing or inconsistent input data. Carries the offending file
// and row when known.
class DataError : public Error {
public:
  explicit DataError(const std::string &what, std::string file = {},
                     long row = -1)
      : Error(ErrorKind::Data, format(what, file, row)),
        file_(std::move(file)), row_(row) {}
  const std::string &file() const noexcept { return file_; }
  long row() const noexcept { return row_; }

private:
  static std::string format(const std::string &what, const std::string &file,
                            long row) {
    std::string msg = what;
    if (!file.empty()) msg += " [file " + file;
    if (!file.empty() && row >= 0) msg += ", row " + std::to_string(row);
    if (!file.empty()) msg += "]";
    return msg;
  }
  std::string file_;
  long row_;
};

// Solver non-convergence, non-finite gradients and the like.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string &what, double residual = 0.0)
      : Error(ErrorKind::Numerical, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

// A metric that is mathematically undefined for the given input (e.g. BA
// when one class is absent from the true labels).
class UndefinedMetric : public Error {
public:
  explicit UndefinedMetric(const std::string &what)
      : Error(ErrorKind::Data, what) {}
};

} // namespace capstate
