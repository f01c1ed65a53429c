#pragma once

#include <stdexcept>
#include <string>

namespace bizcorpus {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input, unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration; detected before any work starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pluggable backend (classifier, tokenizer, model, search) failed or timed out.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Inputs that violate a cross-stage contract, e.g. a sentence table that
/// was not computed over the corpus being filtered.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Fatal failure inside a pipeline stage, tagged with where it happened.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string document_id, const std::string& what)
      : Error(stage + ": " + what + (document_id.empty() ? "" : " (document " + document_id + ")")),
        stage_(std::move(stage)),
        document_id_(std::move(document_id)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& document_id() const noexcept { return document_id_; }

 private:
  std::string stage_;
  std::string document_id_;
};

}  // namespace bizcorpus
