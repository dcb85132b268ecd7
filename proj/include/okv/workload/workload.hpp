#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "okv/oram/geometry.hpp"

namespace okv {

enum class WorkloadKind { kUniform, kZipfian, kSmallBank };

std::string to_string(WorkloadKind k);
WorkloadKind parse_workload_kind(const std::string& s);

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::kUniform;
  std::uint64_t key_space = 128;
  std::uint64_t key_offset = 0;  // shifts every key, for disjoint workloads
  double read_ratio = 0.5;
  std::uint32_t ops_per_txn = 4;
  std::uint64_t txns = 200;
  std::uint32_t sessions = 8;
  double zipf_theta = 0.99;
  // Contention: this fraction of ops goes to the first `hot_keys` keys.
  std::uint32_t hot_keys = 0;
  double hot_ratio = 0.0;
  std::uint32_t value_bytes = 8;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TxnOp {
  enum class Kind : std::uint8_t {
    kRead,
    kWrite,  // stores `payload`
    kAdd,    // stores the integer payload of this txn's last read of `key` plus `amount`
  };
  Kind kind = Kind::kRead;
  Key key = 0;
  std::string payload;
  std::int64_t amount = 0;
};

struct TxnProgram {
  std::string label;
  std::vector<TxnOp> ops;
};

/// Deterministic stream of transaction programs.
class WorkloadGenerator {
 public:
  explicit WorkloadGenerator(WorkloadSpec spec);
  TxnProgram next();
  const WorkloadSpec& spec() const { return spec_; }

 private:
  Key pick_key();
  std::string payload();
  TxnProgram smallbank();

  WorkloadSpec spec_;
  std::mt19937_64 rng_;
  std::vector<double> zipf_cdf_;
};

// Stored values carry their writer: "<ts>:<payload>".
std::string encode_value(std::uint64_t writer, const std::string& payload);
std::uint64_t value_writer(const std::string& value);
std::string value_payload(const std::string& value);

}  // namespace okv
