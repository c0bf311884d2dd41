#pragma once

#include <stdexcept>
#include <string>

namespace rlvr {

// Base for every operational failure in the engine. `code()` is the stable
// machine-readable identifier the CLI emits in its JSON error reports;
// `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config_mismatch", message) {}
};

class MissingDescriptionError : public Error {
 public:
  explicit MissingDescriptionError(const std::string& message)
      : Error("missing_description", message) {}
};

class GroupTooSmallError : public Error {
 public:
  explicit GroupTooSmallError(const std::string& message) : Error("group_too_small", message) {}
};

class LengthMismatchError : public Error {
 public:
  explicit LengthMismatchError(const std::string& message) : Error("length_mismatch", message) {}
};

class SupportMismatchError : public Error {
 public:
  explicit SupportMismatchError(const std::string& message)
      : Error("support_mismatch", message) {}
};

class TransportExhaustedError : public Error {
 public:
  explicit TransportExhaustedError(const std::string& message)
      : Error("transport_exhausted", message) {}
};

class MalformedReplyError : public Error {
 public:
  explicit MalformedReplyError(const std::string& message) : Error("malformed_reply", message) {}
};

class NoRuleMatchedError : public Error {
 public:
  explicit NoRuleMatchedError(const std::string& message) : Error("no_rule_matched", message) {}
};

class IllegalContentError : public Error {
 public:
  explicit IllegalContentError(const std::string& message) : Error("illegal_content", message) {}
};

class EmptyMatrixError : public Error {
 public:
  explicit EmptyMatrixError(const std::string& message) : Error("empty_matrix", message) {}
};

class BadThresholdError : public Error {
 public:
  explicit BadThresholdError(const std::string& message) : Error("bad_threshold", message) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& message) : Error("empty_input", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_failure", message) {}
};

// Schema violation in an input file or request body. `field` is the path of
// the offending field (e.g. "rollouts[3].sample_index"); `line` is the
// 1-based JSONL line number when the input came from a file (0 otherwise).
class SchemaError : public Error {
 public:
  SchemaError(const std::string& message, std::string field = "", std::size_t line = 0)
      : Error("schema_violation", message), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

}  // namespace rlvr
