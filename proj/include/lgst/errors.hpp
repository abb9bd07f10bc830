#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lgst {

// Base for every error raised by the library. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands disagree on qubit count or shape.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A non-Hermitian Pauli (odd power of i) was passed where a Hermitian one is required.
class PhaseError : public Error {
 public:
  using Error::Error;
};

// Malformed error model or a gate the model does not know about.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(what), issues_{what} {}
  ModelError(const std::string& what, std::vector<std::string> issues)
      : Error(what), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

class DesignError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// Malformed input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgst
