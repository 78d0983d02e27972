#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace xcsr {

/// Raised when an operation is handed a shard that fails validation.
/// Carries the full list of violations from validate_shard.
class ShardValidationError : public std::runtime_error {
 public:
  explicit ShardValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class CollectiveErrc {
  SizeMismatch,
  PeerFailure,
  Timeout,
  ProtocolViolation,
};

const char* to_string(CollectiveErrc kind) noexcept;

/// Failure of a collective operation (either backend).
class CollectiveError : public std::runtime_error {
 public:
  CollectiveError(CollectiveErrc kind, const std::string& detail);
  CollectiveErrc kind() const noexcept { return kind_; }

 private:
  CollectiveErrc kind_;
};

/// Cover/disjoint violations when assembling rank shards into one dataset.
class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or corrupt shard files and manifests.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Infeasible generator parameters or CLI configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace xcsr
