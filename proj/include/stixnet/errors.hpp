#pragma once

#include <stdexcept>
#include <string>

namespace stixnet {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input bytes are not valid UTF-8.
class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Malformed knowledge-base input (bundle, CSV, jsonl) or an alias conflict.
class IngestError : public Error {
 public:
  using Error::Error;
};

class AliasConflict : public IngestError {
 public:
  AliasConflict(const std::string& surface, const std::string& existing_id,
                const std::string& incoming)
      : IngestError("alias conflict on '" + surface + "': already bound to " +
                    existing_id + ", rejected for " + incoming),
        surface_(surface),
        existing_id_(existing_id) {}

  const std::string& surface() const noexcept { return surface_; }
  const std::string& existing_id() const noexcept { return existing_id_; }

 private:
  std::string surface_;
  std::string existing_id_;
};

class UnknownIocType : public Error {
 public:
  using Error::Error;
};

class AlreadyDecided : public Error {
 public:
  using Error::Error;
};

class UnknownCandidate : public Error {
 public:
  using Error::Error;
};

/// CoNLL-U token text does not line up with the tokenizer.
class AlignmentError : public Error {
 public:
  AlignmentError(std::size_t sentence, const std::string& detail)
      : Error("sentence " + std::to_string(sentence) + ": " + detail), sentence_(sentence) {}
  std::size_t sentence() const noexcept { return sentence_; }

 private:
  std::size_t sentence_;
};

class TrainError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure raised inside one pipeline sub-module.
class ModuleError : public Error {
 public:
  ModuleError(std::string module, const std::string& what)
      : Error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace stixnet
