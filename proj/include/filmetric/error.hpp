#pragma once

#include <stdexcept>
#include <string>

namespace filmetric {

/// Broad failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind { config, io, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid parameters, violated preconditions, malformed config files.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::config, what) {}
};

/// Missing/unreadable/corrupt files, checksum mismatches.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

/// Non-finite values, violated numerical invariants.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::numerical, what) {}
};

}  // namespace filmetric
