#pragma once

#include <stdexcept>
#include <string>

namespace gpsr {

// Base for every error the library throws. `code` is machine-readable and is what
// the service layer reports to clients.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code))
  {
  }
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class SchemaError : public Error {
public:
  explicit SchemaError(const std::string& message) : Error("SCHEMA_ERROR", message) {}
};

class ReferenceError : public Error {
public:
  explicit ReferenceError(const std::string& message) : Error("REFERENCE_ERROR", message) {}
};

class PreconditionError : public Error {
public:
  explicit PreconditionError(const std::string& message) : Error("PRECONDITION", message) {}
};

}  // namespace gpsr
