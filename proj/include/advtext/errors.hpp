#pragma once

#include <stdexcept>
#include <string>

namespace advtext {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSONL line, matrix, vocabulary, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A caller-side contract was violated (empty body, bad index, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Embedding / gradient tables that cannot be paired.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Network failure that persisted through all retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The remote answered, but not with something we accept.
class ProtocolError : public Error {
 public:
  ProtocolError(int status, std::string body, const std::string& what)
      : Error(what), status_(status), body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Cassette replay miss while network access is disabled.
class ReplayMissError : public Error {
 public:
  using Error::Error;
};

}  // namespace advtext
