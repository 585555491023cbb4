#pragma once

#include <stdexcept>
#include <string>

namespace seerdrive {

// Error taxonomy. Every throwing path uses one of these so the CLI can map
// failures to stable exit codes and one-line messages.

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error("input error: " + msg) {}
};

// Persistence errors: each load failure mode is distinguishable by type.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

struct VersionError : std::runtime_error {
  explicit VersionError(const std::string& msg) : std::runtime_error("version error: " + msg) {}
};

struct TruncatedError : std::runtime_error {
  explicit TruncatedError(const std::string& msg) : std::runtime_error("truncated record: " + msg) {}
};

struct ChecksumError : std::runtime_error {
  explicit ChecksumError(const std::string& msg) : std::runtime_error("checksum error: " + msg) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error("divergence: " + msg) {}
};

}  // namespace seerdrive
