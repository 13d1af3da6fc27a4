#pragma once

#include <stdexcept>
#include <string>

namespace guidex {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain type was constructed with values violating its invariants.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Two assignments disagree on the value of a variable.
class ConflictError : public Error {
 public:
  explicit ConflictError(std::string key)
      : Error("conflicting values for variable '" + key + "'"), key_(std::move(key)) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// An assignment cannot be evaluated against a tree (missing variables,
/// unknown names, or values outside the declared domain).
class ExecutionError : public Error {
 public:
  using Error::Error;
};

/// A document could not be parsed into a domain object.
class ParseError : public Error {
 public:
  enum class Kind { syntax, schema, invariant };

  ParseError(Kind kind, std::string where, const std::string& message)
      : Error(describe(kind, where, message)), kind_(kind), where_(std::move(where)) {}

  Kind kind() const { return kind_; }
  /// Byte offset (syntax errors) or JSON field path (schema errors).
  const std::string& where() const { return where_; }

 private:
  static std::string describe(Kind kind, const std::string& where, const std::string& message) {
    const char* label = kind == Kind::syntax   ? "syntax error"
                        : kind == Kind::schema ? "schema violation"
                                               : "invalid tree";
    return std::string(label) + (where.empty() ? "" : " at " + where) + ": " + message;
  }

  Kind kind_;
  std::string where_;
};

/// The LLM backend failed permanently or returned unusable output.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace guidex
