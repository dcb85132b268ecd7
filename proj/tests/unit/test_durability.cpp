#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "okv/common/errors.hpp"
#include "okv/durability/counter.hpp"
#include "okv/durability/crash.hpp"
#include "okv/durability/records.hpp"

namespace okv {
namespace {

const TreeGeometry kGeom{3, 2, 3, 3, 12};

CheckpointLimits limits() {
  CheckpointLimits l;
  l.geometry = kGeom;
  l.delta_positions = 10;
  l.stash_bound = 6;
  l.max_epoch_txns = 20;
  l.value_capacity = 16;
  return l;
}

Checkpoint sample(std::mt19937_64& gen, bool full, std::size_t positions, std::size_t stash,
                  std::size_t txns) {
  Checkpoint c;
  c.epoch = 5;
  c.full = full;
  c.prev = std::pair<std::uint64_t, std::uint8_t>{4, 0};
  c.access_count = gen() % 1000;
  c.op_count = gen() % 1000;
  c.buckets.resize(kGeom.bucket_count());
  for (auto& b : c.buckets) {
    b.slots.resize(kGeom.slots_per_bucket());
    for (auto& s : b.slots) {
      s.real_role = gen() % 2;
      s.valid = gen() % 2;
      s.key = s.real_role && gen() % 2 ? gen() % 50 : kNoKey;
    }
    b.version = gen() % 9;
    b.reads = gen() % 3;
    b.stamp = {gen() % 6, static_cast<std::uint8_t>(gen() % 2)};
  }
  for (std::size_t i = 0; i < positions; ++i) c.positions[i * 3] = gen() % kGeom.leaf_count();
  for (std::size_t i = 0; i < stash; ++i) {
    c.stash[100 + i] = {static_cast<Leaf>(gen() % 8), Bytes(gen() % 17, 7)};
  }
  for (std::size_t i = 0; i < txns; ++i) c.committed.push_back(gen() % 2);
  return c;
}

TEST(RecordsTest, CheckpointRoundTripsAndHasConstantLength) {
  Sealer sealer(KeyMaterial::from_seed(3), 96);
  std::mt19937_64 gen(1);
  const Iv iv{};
  std::set<std::size_t> delta_sizes, full_sizes;
  for (int i = 0; i < 50; ++i) {
    const bool full = i % 2;
    const std::size_t npos = gen() % (full ? kGeom.capacity + 1 : 11);
    auto c = sample(gen, full, npos, gen() % 7, gen() % 21);
    auto rec = seal_checkpoint(sealer, c, limits(), iv);
    (full ? full_sizes : delta_sizes).insert(rec.size());
    EXPECT_EQ(open_checkpoint(sealer, rec, checkpoint_key(5, 0), limits()), c);
  }
  EXPECT_EQ(delta_sizes.size(), 1u);
  EXPECT_EQ(full_sizes.size(), 1u);
}

TEST(RecordsTest, CheckpointBoundsAreEnforced) {
  Sealer sealer(KeyMaterial::from_seed(3), 96);
  std::mt19937_64 gen(2);
  EXPECT_THROW(seal_checkpoint(sealer, sample(gen, false, 11, 0, 0), limits(), {}),
               std::logic_error);
  EXPECT_THROW(seal_checkpoint(sealer, sample(gen, false, 0, 7, 0), limits(), {}),
               std::runtime_error);
}

TEST(RecordsTest, CheckpointBoundToItsKey) {
  Sealer sealer(KeyMaterial::from_seed(3), 96);
  std::mt19937_64 gen(3);
  auto rec = seal_checkpoint(sealer, sample(gen, true, 4, 1, 1), limits(), {});
  EXPECT_THROW(open_checkpoint(sealer, rec, checkpoint_key(5, 1), limits()), IntegrityError);
  EXPECT_THROW(open_checkpoint(sealer, rec, checkpoint_key(4, 0), limits()), IntegrityError);
  rec[rec.size() / 2] ^= 1;
  EXPECT_THROW(open_checkpoint(sealer, rec, checkpoint_key(5, 0), limits()), IntegrityError);
}

TEST(RecordsTest, PathLogRoundTripsAndRejectsOtherBatches) {
  Sealer sealer(KeyMaterial::from_seed(4), 96);
  PathLog log{7, 2, {}};
  for (int i = 0; i < 5; ++i) {
    log.accesses.push_back({static_cast<Leaf>(i), {1, 2, 0, static_cast<SlotIndex>(i)}});
  }
  auto rec = seal_path_log(sealer, log, kGeom, 5, {});
  auto back = open_path_log(sealer, rec, 7, 2, kGeom, 5);
  EXPECT_EQ(back.accesses, log.accesses);
  EXPECT_THROW(open_path_log(sealer, rec, 7, 3, kGeom, 5), IntegrityError);
  EXPECT_THROW(open_path_log(sealer, rec, 6, 2, kGeom, 5), IntegrityError);
  log.accesses.pop_back();
  EXPECT_THROW(seal_path_log(sealer, log, kGeom, 5, {}), std::logic_error);
}

TEST(RecordsTest, PathLogSecretIsEncrypted) {
  Sealer sealer(KeyMaterial::from_seed(4), 96);
  PathLog log{1, 0, {}};
  for (int i = 0; i < 4; ++i) log.accesses.push_back({0x5A5A5A5Au, {0x7777, 0x7777, 0x7777, 0x7777}});
  auto rec = seal_path_log(sealer, log, kGeom, 4, CryptoRng(Key256{}).iv());
  int runs = 0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) runs += rec[i] == 0x77 && rec[i + 1] == 0x77;
  EXPECT_LT(runs, 3);
}

TEST(CounterTest, FileCounterPersistsAcrossInstances) {
  auto path = std::filesystem::temp_directory_path() / "okv_counter_test";
  std::filesystem::remove(path);
  {
    FileCounter c(path);
    EXPECT_FALSE(c.load().initialized);
    c.store({true, 9, 2, 1});
  }
  FileCounter again(path);
  EXPECT_EQ(again.load(), (CounterState{true, 9, 2, 1}));
  std::filesystem::remove(path);
}

TEST(CrashScheduleTest, PointsFireOnce) {
  CrashSchedule s({{2, Hook::kBeforeCheckpoint, 0}});
  s.visit({1, Hook::kBeforeCheckpoint, 0});
  EXPECT_THROW(s.visit({2, Hook::kBeforeCheckpoint, 0}), CrashInjected);
  s.visit({2, Hook::kBeforeCheckpoint, 0});
  EXPECT_EQ(s.fired(), 1u);
}

TEST(CrashScheduleTest, ParsesNamedPoints) {
  auto s = CrashSchedule::parse("3:before-batch-read:1,4:before-recovery-counter");
  EXPECT_THROW(s.visit({3, Hook::kBeforeBatchRead, 1}), CrashInjected);
  EXPECT_THROW(s.visit({4, Hook::kBeforeRecoveryCounter, 0}), CrashInjected);
  EXPECT_THROW(CrashSchedule::parse("3:nope"), ConfigError);
  for (std::size_t i = 0; i < kHookCount; ++i) {
    EXPECT_EQ(parse_hook(hook_name(static_cast<Hook>(i))), static_cast<Hook>(i));
  }
}

TEST(CrashScheduleTest, RandomScheduleIsDeterministic) {
  auto count = [](std::uint64_t seed) {
    auto s = CrashSchedule::random(seed, 0.2);
    std::vector<int> hits;
    for (int e = 0; e < 20; ++e) {
      try {
        s.visit({static_cast<std::uint64_t>(e), Hook::kBeforeBatchRead, 0});
      } catch (const CrashInjected&) {
        hits.push_back(e);
      }
    }
    return hits;
  };
  EXPECT_EQ(count(5), count(5));
  EXPECT_FALSE(count(5).empty());
}

}  // namespace
}  // namespace okv
