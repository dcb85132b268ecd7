#include <gtest/gtest.h>

#include <filesystem>

#include "okv/common/errors.hpp"
#include "okv/storage/client.hpp"
#include "okv/storage/malicious.hpp"
#include "okv/storage/server.hpp"
#include "okv/storage/transport.hpp"
#include "okv/workload/deployment.hpp"

namespace okv {
namespace {

std::vector<Bytes> slots(std::string_view tag, int n = 3) {
  std::vector<Bytes> out;
  for (int i = 0; i < n; ++i) out.push_back(to_bytes(std::string(tag) + std::to_string(i)));
  return out;
}

TEST(Protocol, RequestRoundTripsEveryOp) {
  Request r;
  r.id = 77;
  r.batch = true;
  r.ops.push_back(ReadSlotReq{3, 2});
  r.ops.push_back(WriteBucketReq{4, 9, slots("w")});
  r.ops.push_back(RollbackReq{{5, {{1, 2}, {6, 1}}}});
  r.ops.push_back(LogAppendReq{{1, 8, 2}, to_bytes("record")});
  r.ops.push_back(LogReadReq{{2, 3, 0}});
  r.ops.push_back(GcReq{{4, {}}, 2});
  r.ops.push_back(ReadBucketReq{11});

  auto back = decode_request(encode_request(r));
  EXPECT_EQ(back.id, 77u);
  EXPECT_TRUE(back.batch);
  ASSERT_EQ(back.ops.size(), r.ops.size());
  for (std::size_t i = 0; i < r.ops.size(); ++i) EXPECT_EQ(op_type(back.ops[i]), op_type(r.ops[i]));
  const auto& w = std::get<WriteBucketReq>(back.ops[1]);
  EXPECT_EQ(w.bucket, 4u);
  EXPECT_EQ(w.version, 9u);
  EXPECT_EQ(w.slots, slots("w"));
  const auto& rb = std::get<RollbackReq>(back.ops[2]);
  EXPECT_EQ(rb.target.evict_paths, 5u);
  EXPECT_EQ(rb.target.reshuffles.size(), 2u);
  EXPECT_EQ(std::get<LogAppendReq>(back.ops[3]).key, (LogKey{1, 8, 2}));
  EXPECT_EQ(std::get<GcReq>(back.ops[5]).log_horizon, 2u);
}

TEST(Protocol, ResponseRoundTripAndTruncationRejected) {
  Response r{5, {{Status::kOk, 3, slots("x", 2)}, {Status::kNotFound, 0, {}}}};
  auto enc = encode_response(r);
  auto back = decode_response(enc);
  EXPECT_EQ(back.id, 5u);
  ASSERT_EQ(back.results.size(), 2u);
  EXPECT_EQ(back.results[0].items, slots("x", 2));
  EXPECT_EQ(back.results[1].status, Status::kNotFound);

  enc.resize(enc.size() - 1);
  EXPECT_THROW(decode_response(enc), DecodeError);
}

TEST(BucketStore, VersionsRollbackAndGc) {
  VersionedBucketStore s;
  s.write(1, 0, slots("a"));
  s.write(1, 1, slots("b"));
  s.write(1, 4, slots("c"));  // version jumps are allowed
  EXPECT_THROW(s.write(1, 4, slots("d")), ProtocolError);
  EXPECT_EQ(s.read_slot(1, 0).version, 4u);
  EXPECT_EQ(s.read_slot(1, 0).envelope, to_bytes("c0"));
  EXPECT_EQ(s.previous_version(1), 1u);
  EXPECT_EQ(s.read_slot_at(1, 2, 0), to_bytes("a2"));

  // Bucket 1 is at version evict_paths + reshuffles for the target.
  VersionTarget t{1, {}};
  ASSERT_EQ(t.version_of(1), 1u);
  s.rollback(t);
  EXPECT_EQ(s.current_version(1), 1u);
  EXPECT_EQ(s.read_slot(1, 1).envelope, to_bytes("b1"));

  // A target naming a version that was never stored changes nothing.
  s.write(2, 0, slots("z"));
  EXPECT_THROW(s.rollback(VersionTarget{7, {}}), ProtocolError);
  EXPECT_EQ(s.current_version(1), 1u);
  EXPECT_EQ(s.current_version(2), 0u);

  s.write(1, 2, slots("e"));
  s.gc(VersionTarget{1, {}});
  EXPECT_FALSE(s.read_slot_at(1, 0, 0).has_value());
  EXPECT_TRUE(s.read_slot_at(1, 0, 1).has_value());
  EXPECT_EQ(s.current_version(1), 2u);
}

TEST(BucketStore, DirectoryBackedReload) {
  auto dir = std::filesystem::temp_directory_path() / "okv_store_reload";
  std::filesystem::remove_all(dir);
  {
    VersionedBucketStore s(dir);
    s.write(3, 0, slots("p"));
    s.write(3, 1, slots("q"));
    s.rollback(VersionTarget{0, {}});
  }
  VersionedBucketStore s(dir);
  EXPECT_EQ(s.current_version(3), 0u);
  EXPECT_EQ(s.read_bucket(3).second, slots("p"));
  // Rolled-back versions are gone for good, on disk too.
  EXPECT_FALSE(s.read_slot_at(3, 0, 1).has_value());
  s.write(3, 1, slots("u"));
  EXPECT_EQ(s.read_slot(3, 0).envelope, to_bytes("u0"));
  std::filesystem::remove_all(dir);
}

TEST(RecoveryUnitTest, AppendIsIdempotentButNotOverwritable) {
  RecoveryUnit u;
  LogKey k{1, 4, 0};
  u.append(k, to_bytes("one"));
  u.append(k, to_bytes("one"));
  EXPECT_EQ(u.size(), 1u);
  EXPECT_THROW(u.append(k, to_bytes("two")), ProtocolError);
  EXPECT_EQ(u.read(k), to_bytes("one"));
  EXPECT_FALSE(u.read({1, 4, 1}).has_value());

  u.append({1, 5, 0}, to_bytes("five"));
  u.append({2, 3, 0}, to_bytes("ck"));
  EXPECT_EQ(u.newest(1), (LogKey{1, 5, 0}));
  EXPECT_EQ(u.other_than({1, 5, 0}), to_bytes("one"));
  u.gc(5);
  EXPECT_FALSE(u.read(k).has_value());
  EXPECT_FALSE(u.read({2, 3, 0}).has_value());
  EXPECT_TRUE(u.read({1, 5, 0}).has_value());
}

TEST(Transports, TcpMatchesInProcess) {
  StorageServer tcp_side, local_side;
  TcpServer srv(tcp_side, "127.0.0.1", 0);
  TcpTransport tcp("127.0.0.1", srv.port());
  InProcessTransport local(local_side);
  StorageClient a(tcp), b(local);
  for (auto* c : {&a, &b}) {
    c->write_bucket({1, 0, slots("r")});
    c->write_buckets({{2, 0, slots("s")}, {3, 0, slots("t")}});
    c->log_append({1, 1, 0}, to_bytes("log"));
  }
  std::vector<ReadSlotReq> reads{{1, 2}, {2, 0}, {3, 1}};
  auto ra = a.read_slots(reads);
  auto rb = b.read_slots(reads);
  ASSERT_EQ(ra.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ra[i].envelope, rb[i].envelope);
  EXPECT_EQ(ra[0].envelope, to_bytes("r2"));
  EXPECT_EQ(a.round_trips(), b.round_trips());
  EXPECT_EQ(a.log_read({1, 1, 0}), to_bytes("log"));
  EXPECT_FALSE(a.log_read({1, 2, 0}).has_value());
  srv.stop();
}

TEST(Malicious, ScriptParsing) {
  auto s = parse_attack_script("# comment\ntamper-slot 3 17\nreplay-slot 9\n\nwithhold-log 0\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].kind, Attack::Kind::kTamperSlot);
  EXPECT_EQ(s[0].index, 3u);
  EXPECT_EQ(s[0].bit, 17u);
  EXPECT_EQ(s[1].kind, Attack::Kind::kReplaySlot);
  EXPECT_EQ(s[2].kind, Attack::Kind::kWithholdLog);
  EXPECT_THROW(parse_attack_script("flip-slot 1"), ConfigError);
  EXPECT_THROW(parse_attack_script("tamper-slot"), ConfigError);
}

ProxyConfig tiny() {
  ProxyConfig c;
  c.geometry = {4, 4, 6, 3, 32};
  c.epoch = {3, 8, 8, 1};
  c.block_size = 96;
  c.mode = ExecMode::kSequential;
  c.max_epoch_txns = 64;
  return c;
}

// Writes and reads a few keys per epoch; returns normally only if the
// proxy never noticed anything.
void churn(Proxy& p, int epochs) {
  for (int e = 0; e < epochs; ++e) {
    auto t = *p.begin();
    for (Key k = 1; k <= 4; ++k) {
      p.read(t, k + e);
      p.write(t, k, to_bytes("v" + std::to_string(e)));
    }
    p.commit(t);
    const auto now = p.epoch();
    while (p.epoch() == now) p.tick();
  }
}

TEST(Malicious, SlotAttacksAreDetected) {
  for (auto kind : {Attack::Kind::kTamperSlot, Attack::Kind::kReplaySlot}) {
    DeploymentOptions o{tiny()};
    o.attacks = std::vector<Attack>{{kind, 40, 5}};
    Deployment d(o);
    auto& p = d.restart();
    EXPECT_THROW(churn(p, 12), IntegrityError);
    EXPECT_EQ(d.malicious()->fired(), 1u);
    EXPECT_TRUE(p.dead());
    EXPECT_THROW(p.begin(), std::logic_error);
  }
}

TEST(Malicious, LogAttacksAreDetectedDuringRecovery) {
  for (auto kind : {Attack::Kind::kTamperLog, Attack::Kind::kWithholdLog,
                    Attack::Kind::kReplayLog}) {
    for (std::uint64_t index : {0u, 1u}) {
      DeploymentOptions o{tiny()};
      o.attacks = std::vector<Attack>{{kind, index, 9}};
      Deployment d(o);
      auto& p = d.restart();
      churn(p, 3);
      CrashSchedule crash({{p.epoch(), Hook::kBeforeBatchRead, 1}});
      p.set_hook(crash.hook());
      EXPECT_THROW(churn(p, 1), CrashInjected);
      EXPECT_THROW(d.restart(), IntegrityError) << "attack index " << index;
      EXPECT_EQ(d.malicious()->fired(), 1u);
    }
  }
}

}  // namespace
}  // namespace okv
