#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spoofkit {

struct Diagnostic {
  enum class Severity { error, warning };

  Severity severity = Severity::error;
  std::string path;
  std::string message;

  bool is_error() const { return severity == Severity::error; }
  bool operator==(const Diagnostic&) const = default;
};

std::string format_diagnostic(const Diagnostic& d);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Profile document errors.
class SyntaxError : public Error {
 public:
  SyntaxError(std::string path, const std::string& message)
      : Error(message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<Diagnostic> diagnostics);
  const std::string& path() const { return diagnostics_.front().path; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// Signal synthesis errors.
class IncompatibleMode : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class EmptyTrace : public Error {
 public:
  using Error::Error;
};

// Malformed trace files and plan documents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class UnmappableOverride : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Mock device errors.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DuplicateProcess : public Error {
 public:
  using Error::Error;
};

// Session lifecycle errors.
class SessionError : public Error {
 public:
  using Error::Error;
};

class IllegalState : public SessionError {
 public:
  using SessionError::SessionError;
};

class AttachError : public SessionError {
 public:
  using SessionError::SessionError;
};

class InjectError : public SessionError {
 public:
  using SessionError::SessionError;
};

class TransportError : public SessionError {
 public:
  using SessionError::SessionError;
};

}  // namespace spoofkit
