#pragma once

#include <stdexcept>
#include <string>

namespace tagseq {

// Precondition / invariant violation: the caller broke a documented contract.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Tensor dimension mismatch; message names both offending shapes.
class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Bad or conflicting configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File and stream failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus content; message carries the 1-based line number.
class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training aborted (e.g. loss became non-finite); message names the step.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tagseq
