#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace biaslens {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or malformed provider payload.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Domain invariant violations; carries every finding, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> findings)
      : Error(join(findings)), findings_(std::move(findings)) {}
  explicit ValidationError(const std::string& finding)
      : ValidationError(std::vector<std::string>{finding}) {}

  const std::vector<std::string>& findings() const { return findings_; }

 private:
  static std::string join(const std::vector<std::string>& findings) {
    std::string out;
    for (const auto& f : findings) {
      if (!out.empty()) out += "; ";
      out += f;
    }
    return out.empty() ? std::string("validation failed") : out;
  }

  std::vector<std::string> findings_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class AuthError : public TransportError {
 public:
  using TransportError::TransportError;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

}  // namespace biaslens
