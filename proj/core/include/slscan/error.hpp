#pragma once

#include <stdexcept>
#include <string>

namespace slscan {

/// Broad failure class; the command-line tool maps each kind to an exit code.
enum class ErrorKind {
  config,     ///< bad configuration, missing file, invalid parameters
  data,       ///< malformed or inconsistent input data
  numerical,  ///< a solver failed or a configuration is degenerate
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

/// Wraps an error raised inside a pipeline stage so callers can tell where it happened.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// 0 success, 1 usage/config, 2 data, 3 numerical.
int exit_code(ErrorKind kind) noexcept;

}  // namespace slscan
