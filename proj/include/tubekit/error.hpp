#pragma once

#include <stdexcept>
#include <string>

namespace tubekit {

// Base of every error raised by the library. The CLI maps the concrete
// subclass onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept = 0;
};

// Invalid argument or configuration (CLI exit code 2).
class ParameterError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parameter"; }
};

// Malformed or unreadable file; `field()` names the offending header field
// or payload property (CLI exit code 3).
class IoError : public Error {
 public:
  IoError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }
  const char* kind() const noexcept override { return "io"; }

 private:
  std::string field_;
};

// A quantity that is mathematically undefined for the given inputs, such as
// a log ratio <= 1 or a zero-norm cosine (CLI exit code 4).
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

}  // namespace tubekit
