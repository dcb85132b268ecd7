#include <gtest/gtest.h>

#include "okv/common/errors.hpp"
#include "okv/crypto/envelope.hpp"

namespace okv {
namespace {

class SealerTest : public ::testing::Test {
 protected:
  KeyMaterial keys = KeyMaterial::from_seed(7);
  Sealer sealer{keys, 128};
  FreshnessId id = FreshnessId::tree(3, 2, 9, {4, 0});
};

TEST_F(SealerTest, RoundTripsAndRandomizes) {
  Bytes pt = to_bytes("hello bucket");
  auto a = sealer.seal(pt, id);
  auto b = sealer.seal(pt, id);
  EXPECT_NE(a.data, b.data);
  EXPECT_EQ(sealer.open(a, id), pt);
  EXPECT_EQ(sealer.open(b, id), pt);
}

TEST_F(SealerTest, EnvelopeLengthIsConstant) {
  EXPECT_EQ(sealer.seal({}, id).data.size(), 128u);
  EXPECT_EQ(sealer.seal(Bytes(sealer.payload_capacity(), 0xAB), id).data.size(), 128u);
  EXPECT_EQ(sealer.open(sealer.seal({}, id), id), Bytes{});
}

TEST_F(SealerTest, OversizedPlaintextIsConfigError) {
  EXPECT_THROW(sealer.seal(Bytes(sealer.payload_capacity() + 1), id), ConfigError);
}

TEST_F(SealerTest, EveryFieldOfTheIdIsBound) {
  auto env = sealer.seal(to_bytes("x"), id);
  auto bumped = id;
  bumped.version += 1;
  EXPECT_THROW(sealer.open(env, bumped), IntegrityError);
  bumped = id;
  bumped.slot += 1;
  EXPECT_THROW(sealer.open(env, bumped), IntegrityError);
  bumped = id;
  bumped.stamp.phase = WriteStamp::kRecovery;
  EXPECT_THROW(sealer.open(env, bumped), IntegrityError);
  EXPECT_THROW(sealer.open(env, FreshnessId::log(3, 9, 2)), IntegrityError);
}

TEST_F(SealerTest, EverySingleBitFlipIsRejected) {
  auto env = sealer.seal(to_bytes("payload"), id);
  for (std::size_t bit = 0; bit < env.data.size() * 8; ++bit) {
    auto t = env;
    t.data[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_THROW(sealer.open(t, id), IntegrityError) << "bit " << bit;
  }
}

TEST_F(SealerTest, OlderVersionIsRejected) {
  auto old_env = sealer.seal(to_bytes("v1"), FreshnessId::tree(3, 2, 8, {3, 0}));
  EXPECT_THROW(sealer.open(old_env, id), IntegrityError);
}

TEST_F(SealerTest, HonestModeSkipsTags) {
  Sealer honest(keys, 128, false);
  auto env = honest.seal(to_bytes("abc"), id);
  auto other = id;
  other.version += 5;
  EXPECT_EQ(honest.open(env, other), to_bytes("abc"));
  EXPECT_EQ(env.data.size(), 128u);
}

TEST_F(SealerTest, RecordsAuthenticateAssociatedData) {
  Iv iv{};
  iv[0] = 1;
  auto rid = FreshnessId::log(2, 5, 0);
  auto rec = sealer.seal_record(to_bytes("secret"), to_bytes("public"), rid, iv);
  auto opened = sealer.open_record(rec, rid);
  EXPECT_EQ(opened.secret, to_bytes("secret"));
  EXPECT_EQ(opened.associated, to_bytes("public"));
  for (std::size_t i = 0; i < rec.size(); ++i) {
    auto t = rec;
    t[i] ^= 0x01;
    EXPECT_THROW(sealer.open_record(t, rid), IntegrityError) << "byte " << i;
  }
  EXPECT_THROW(sealer.open_record(rec, FreshnessId::log(2, 6, 0)), IntegrityError);
}

TEST(CryptoRngTest, DeterministicAndCopyable) {
  auto seed = KeyMaterial::from_seed(1).rng_seed;
  CryptoRng a(seed), b(seed);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  CryptoRng c = a;
  EXPECT_EQ(a.uniform(1000), c.uniform(1000));
  auto d1 = CryptoRng::derive(seed, "x", 1), d2 = CryptoRng::derive(seed, "x", 2);
  EXPECT_NE(d1(), d2());
}

TEST(CryptoRngTest, UniformStaysInRange) {
  CryptoRng r(KeyMaterial::from_seed(2).rng_seed);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) ++hist.at(r.uniform(7));
  for (int h : hist) EXPECT_GT(h, 800);
}

TEST(KeyMaterialTest, SerializeRoundTrip) {
  auto k = KeyMaterial::generate();
  auto back = KeyMaterial::parse(k.serialize());
  EXPECT_EQ(back.enc_key, k.enc_key);
  EXPECT_EQ(back.mac_key, k.mac_key);
  EXPECT_EQ(back.rng_seed, k.rng_seed);
}

}  // namespace
}  // namespace okv
