#pragma once

#include <stdexcept>
#include <string>

namespace anonsearch {

// Input file could not be parsed; message carries the offending location.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A looked-up entity (session, round, token) does not exist.
class NotFoundError : public std::runtime_error {
 public:
  explicit NotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation not valid in the current state (e.g. guessing on a finished round).
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed client input (empty guess, bad request body).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace anonsearch
