#include "okv/crypto/envelope.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cstring>
#include <memory>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

Key256 sha256(ByteSpan data) {
  Key256 out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

void os_random(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
}

Bytes aes_ctr(const Key256& key, const Iv& iv, ByteSpan in) {
  std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter> ctx(EVP_CIPHER_CTX_new());
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr, key.data(),
                                 iv.data()) != 1) {
    throw std::runtime_error("AES-CTR init failed");
  }
  Bytes out(in.size());
  int len = 0;
  if (!in.empty() &&
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, in.data(),
                        static_cast<int>(in.size())) != 1) {
    throw std::runtime_error("AES-CTR update failed");
  }
  return out;
}

}  // namespace

KeyMaterial KeyMaterial::generate() {
  KeyMaterial k;
  os_random(k.enc_key);
  os_random(k.mac_key);
  os_random(k.rng_seed);
  return k;
}

KeyMaterial KeyMaterial::from_seed(std::uint64_t seed) {
  auto derive = [seed](std::uint8_t which) {
    ByteWriter w;
    w.raw(to_bytes("okv-keys"));
    w.u64(seed);
    w.u8(which);
    return sha256(w.view());
  };
  return {derive(1), derive(2), derive(3)};
}

Bytes KeyMaterial::serialize() const {
  ByteWriter w(96);
  w.raw(enc_key);
  w.raw(mac_key);
  w.raw(rng_seed);
  return w.take();
}

KeyMaterial KeyMaterial::parse(ByteSpan bytes) {
  ByteReader r(bytes);
  KeyMaterial k;
  auto copy = [&r](Key256& dst) {
    auto s = r.raw(dst.size());
    std::copy(s.begin(), s.end(), dst.begin());
  };
  copy(k.enc_key);
  copy(k.mac_key);
  copy(k.rng_seed);
  r.expect_done();
  return k;
}

Bytes FreshnessId::encode() const {
  ByteWriter w(32);
  w.u8(static_cast<std::uint8_t>(domain));
  w.u32(bucket);
  w.u32(slot);
  w.u64(version);
  w.u64(stamp.epoch);
  w.u8(stamp.phase);
  return w.take();
}

CryptoRng::CryptoRng(const Key256& seed) : key_(seed) {}

CryptoRng CryptoRng::derive(const Key256& root, std::string_view label,
                            std::uint64_t counter) {
  ByteWriter w;
  w.raw(root);
  w.raw(to_bytes(label));
  w.u64(counter);
  return CryptoRng(sha256(w.view()));
}

void CryptoRng::refill() {
  Iv iv{};
  for (int i = 0; i < 8; ++i) iv[8 + i] = static_cast<std::uint8_t>(block_counter_ >> (8 * i));
  static const std::array<std::uint8_t, 512> kZeros{};
  auto ks = aes_ctr(key_, iv, kZeros);
  std::copy(ks.begin(), ks.end(), buf_.begin());
  block_counter_ += buf_.size() / 16;
  pos_ = 0;
}

CryptoRng::result_type CryptoRng::operator()() {
  if (pos_ + 8 > buf_.size()) refill();
  std::uint64_t v = 0;
  std::memcpy(&v, buf_.data() + pos_, 8);
  pos_ += 8;
  return v;
}

std::uint64_t CryptoRng::uniform(std::uint64_t n) {
  if (n <= 1) return 0;
  // Rejection sampling keeps the result unbiased for any n.
  const std::uint64_t limit = max() - (max() % n) - 1;
  std::uint64_t v;
  do {
    v = (*this)();
  } while (v > limit);
  return v % n;
}

Iv CryptoRng::iv() {
  Iv out{};
  std::uint64_t a = (*this)(), b = (*this)();
  std::memcpy(out.data(), &a, 8);
  std::memcpy(out.data() + 8, &b, 8);
  return out;
}

Sealer::Sealer(const KeyMaterial& keys, std::size_t block_size, bool integrity)
    : keys_(keys), block_size_(block_size), integrity_(integrity) {
  if (block_size_ <= kOverhead) {
    throw ConfigError("block size must exceed envelope overhead of " +
                      std::to_string(kOverhead) + " bytes");
  }
}

Bytes Sealer::ctr(ByteSpan in, const Iv& iv) const { return aes_ctr(keys_.enc_key, iv, in); }

std::array<std::uint8_t, Sealer::kTagBytes> Sealer::tag(ByteSpan iv, ByteSpan associated,
                                                        ByteSpan ciphertext,
                                                        const FreshnessId& id) const {
  std::array<std::uint8_t, kTagBytes> out{};
  if (!integrity_) return out;
  ByteWriter msg(iv.size() + associated.size() + ciphertext.size() + 40);
  msg.raw(iv);
  msg.blob(associated);
  msg.blob(ciphertext);
  msg.raw(id.encode());
  unsigned int len = 0;
  HMAC(EVP_sha256(), keys_.mac_key.data(), static_cast<int>(keys_.mac_key.size()),
       msg.view().data(), msg.size(), out.data(), &len);
  return out;
}

Envelope Sealer::seal(ByteSpan plaintext, const FreshnessId& id) const {
  Iv iv{};
  os_random(iv);
  return seal(plaintext, id, iv);
}

Envelope Sealer::seal(ByteSpan plaintext, const FreshnessId& id, const Iv& iv) const {
  if (plaintext.size() > payload_capacity()) {
    throw ConfigError("plaintext of " + std::to_string(plaintext.size()) +
                      " bytes exceeds block payload capacity " +
                      std::to_string(payload_capacity()));
  }
  ByteWriter payload(kLenBytes + payload_capacity());
  payload.u32(static_cast<std::uint32_t>(plaintext.size()));
  payload.raw(plaintext);
  payload.zeros(payload_capacity() - plaintext.size());
  Bytes ct = ctr(payload.view(), iv);
  auto t = tag(iv, {}, ct, id);

  Envelope env;
  env.data.reserve(block_size_);
  env.data.insert(env.data.end(), iv.begin(), iv.end());
  env.data.insert(env.data.end(), ct.begin(), ct.end());
  env.data.insert(env.data.end(), t.begin(), t.end());
  return env;
}

Bytes Sealer::open(const Envelope& env, const FreshnessId& id) const {
  if (env.data.size() != block_size_) throw IntegrityError("envelope has wrong length");
  ByteSpan all(env.data);
  auto iv_span = all.subspan(0, kIvBytes);
  auto ct = all.subspan(kIvBytes, block_size_ - kIvBytes - kTagBytes);
  auto stored_tag = all.subspan(block_size_ - kTagBytes);
  if (integrity_) {
    auto expect = tag(iv_span, {}, ct, id);
    if (CRYPTO_memcmp(expect.data(), stored_tag.data(), kTagBytes) != 0) {
      throw IntegrityError("MAC mismatch on tree slot");
    }
  }
  Iv iv{};
  std::copy(iv_span.begin(), iv_span.end(), iv.begin());
  Bytes payload = ctr(ct, iv);
  ByteReader r(payload);
  auto len = r.u32();
  if (len > payload_capacity()) throw IntegrityError("corrupt envelope length");
  return r.raw_copy(len);
}

Bytes Sealer::seal_record(ByteSpan secret, ByteSpan associated, const FreshnessId& id,
                          const Iv& iv) const {
  Bytes ct = ctr(secret, iv);
  auto t = tag(iv, associated, ct, id);
  ByteWriter w(associated.size() + ct.size() + kIvBytes + kTagBytes + 8);
  w.blob(associated);
  w.u32(static_cast<std::uint32_t>(ct.size()));
  w.raw(iv);
  w.raw(ct);
  w.raw(t);
  return w.take();
}

Sealer::OpenedRecord Sealer::open_record(ByteSpan record, const FreshnessId& id) const {
  OpenedRecord out;
  Bytes ct;
  Iv iv{};
  ByteSpan stored_tag;
  try {
    ByteReader r(record);
    out.associated = r.blob();
    auto ct_len = r.u32();
    auto iv_span = r.raw(kIvBytes);
    std::copy(iv_span.begin(), iv_span.end(), iv.begin());
    ct = r.raw_copy(ct_len);
    stored_tag = r.raw(kTagBytes);
    r.expect_done();
  } catch (const DecodeError&) {
    throw IntegrityError("malformed sealed record");
  }
  if (integrity_) {
    auto expect = tag(iv, out.associated, ct, id);
    if (CRYPTO_memcmp(expect.data(), stored_tag.data(), kTagBytes) != 0) {
      throw IntegrityError("MAC mismatch on log record");
    }
  }
  out.secret = ctr(ct, iv);
  return out;
}

}  // namespace okv
