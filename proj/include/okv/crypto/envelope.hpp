#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>

#include "okv/common/bytes.hpp"

namespace okv {

using Key256 = std::array<std::uint8_t, 32>;
using Iv = std::array<std::uint8_t, 16>;

/// Proxy secrets. These are the only proxy state that survives a crash
/// besides the trusted counter.
struct KeyMaterial {
  Key256 enc_key{};
  Key256 mac_key{};
  Key256 rng_seed{};

  static KeyMaterial generate();
  // Deterministic keys for reproducible runs and tests.
  static KeyMaterial from_seed(std::uint64_t seed);

  Bytes serialize() const;
  static KeyMaterial parse(ByteSpan bytes);
};

/// Identifies which run of an epoch produced a durable write. Recovery of
/// epoch e writes with phase 1, so its writes never collide with the
/// (rolled-back) writes of the crashed run of e.
struct WriteStamp {
  std::uint64_t epoch = 0;
  std::uint8_t phase = 0;

  static constexpr std::uint8_t kNormal = 0;
  static constexpr std::uint8_t kRecovery = 1;

  friend bool operator==(const WriteStamp&, const WriteStamp&) = default;
};

/// What a MAC binds a ciphertext to. No two distinct writes ever share an id.
struct FreshnessId {
  enum class Domain : std::uint8_t { kTree = 1, kLog = 2 };

  Domain domain = Domain::kTree;
  std::uint32_t bucket = 0;     // tree: bucket id; log: record type
  std::uint32_t slot = 0;       // tree: slot index; log: sub-counter
  std::uint64_t version = 0;    // tree: bucket write version; log: counter
  WriteStamp stamp;             // tree only

  static FreshnessId tree(std::uint32_t bucket, std::uint32_t slot,
                          std::uint64_t version, WriteStamp stamp) {
    return {Domain::kTree, bucket, slot, version, stamp};
  }
  static FreshnessId log(std::uint8_t record_type, std::uint64_t counter,
                         std::uint32_t sub) {
    return {Domain::kLog, record_type, sub, counter, {}};
  }

  Bytes encode() const;
  friend bool operator==(const FreshnessId&, const FreshnessId&) = default;
};

struct Envelope {
  Bytes data;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Deterministic CSPRNG (AES-256-CTR keystream). Copyable so that a planning
/// pass can run on a clone and make the same draws as the real pass.
class CryptoRng {
 public:
  using result_type = std::uint64_t;

  CryptoRng() : CryptoRng(Key256{}) {}
  explicit CryptoRng(const Key256& seed);
  // Seed derived from a key plus a domain label and counter.
  static CryptoRng derive(const Key256& root, std::string_view label,
                          std::uint64_t counter);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform in [0, n), unbiased.
  std::uint64_t uniform(std::uint64_t n);
  Iv iv();

 private:
  void refill();

  Key256 key_{};
  std::uint64_t block_counter_ = 0;
  std::array<std::uint8_t, 512> buf_{};
  std::size_t pos_ = 512;
};

/// Randomized encryption (AES-256-CTR) plus HMAC-SHA256 over the ciphertext
/// and a FreshnessId. With integrity disabled (honest-but-curious server)
/// tags are zero-filled but still present so sizes never change.
class Sealer {
 public:
  static constexpr std::size_t kIvBytes = 16;
  static constexpr std::size_t kTagBytes = 32;
  static constexpr std::size_t kLenBytes = 4;
  static constexpr std::size_t kOverhead = kIvBytes + kTagBytes + kLenBytes;

  Sealer(const KeyMaterial& keys, std::size_t block_size, bool integrity = true);

  std::size_t block_size() const { return block_size_; }
  std::size_t payload_capacity() const { return block_size_ - kOverhead; }
  bool integrity() const { return integrity_; }

  // Fixed-size envelope; fresh random IV from the OS.
  Envelope seal(ByteSpan plaintext, const FreshnessId& id) const;
  Envelope seal(ByteSpan plaintext, const FreshnessId& id, const Iv& iv) const;
  // Throws IntegrityError on tag mismatch or malformed envelope.
  Bytes open(const Envelope& env, const FreshnessId& id) const;

  // Variable-size record: `associated` travels in the clear but is
  // authenticated, `secret` is encrypted.
  Bytes seal_record(ByteSpan secret, ByteSpan associated, const FreshnessId& id,
                    const Iv& iv) const;
  struct OpenedRecord {
    Bytes associated;
    Bytes secret;
  };
  OpenedRecord open_record(ByteSpan record, const FreshnessId& id) const;

 private:
  Bytes ctr(ByteSpan in, const Iv& iv) const;
  std::array<std::uint8_t, kTagBytes> tag(ByteSpan iv, ByteSpan associated,
                                          ByteSpan ciphertext,
                                          const FreshnessId& id) const;

  KeyMaterial keys_;
  std::size_t block_size_;
  bool integrity_;
};

}  // namespace okv
