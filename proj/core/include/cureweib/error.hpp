#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cureweib {

// Base for every error the library raises. `code()` is a short stable token
// used by the CLI for machine-parsable diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message) : Error("input", message) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& message) : Error("range", message) {}
};

class IllConditionedError : public Error {
 public:
  explicit IllConditionedError(const std::string& message)
      : Error("ill_conditioned", message) {}
};

class SingularHazardError : public Error {
 public:
  explicit SingularHazardError(const std::string& message)
      : Error("singular_hazard", message) {}
};

// A patient whose likelihood contribution vanishes under the current parameters.
class DegenerateRecordError : public Error {
 public:
  DegenerateRecordError(std::size_t index, const std::string& message)
      : Error("degenerate_record", message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& message) : Error("fit", message) {}
};

}  // namespace cureweib
