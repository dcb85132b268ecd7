#pragma once

#include <stdexcept>
#include <string>

namespace okv {

/// Invalid geometry, batch sizes, oversized values, and similar setup mistakes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A server response failed MAC or freshness verification. The proxy treats
/// this as denial of service and stops.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract wire traffic (version regressions, unknown
/// buckets, rollback beyond the retained horizon).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace okv
