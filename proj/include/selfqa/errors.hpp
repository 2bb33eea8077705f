#pragma once

#include <stdexcept>
#include <string>

namespace selfqa {

// Invalid configuration or parameter out of range.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corpus could not be loaded at all.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A template referenced a slot that has no value.
class TemplateError : public std::runtime_error {
 public:
  TemplateError(const std::string& message, std::string slot)
      : std::runtime_error(message), slot_(std::move(slot)) {}
  const std::string& slot() const { return slot_; }

 private:
  std::string slot_;
};

// Retries exhausted against a backend.
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& message, int last_status)
      : std::runtime_error(message), last_status_(last_status) {}
  int last_status() const { return last_status_; }

 private:
  int last_status_ = 0;
};

// Authentication rejected; never retried.
class CredentialError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend answered but the response did not match the expected schema.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& message, std::string body_excerpt)
      : std::runtime_error(message), body_excerpt_(std::move(body_excerpt)) {}
  const std::string& body_excerpt() const { return body_excerpt_; }

 private:
  std::string body_excerpt_;
};

}  // namespace selfqa
