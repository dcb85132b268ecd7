#include <gtest/gtest.h>

#include "okv/common/errors.hpp"
#include "okv/workload/config.hpp"
#include "okv/workload/history.hpp"
#include "okv/workload/runner.hpp"
#include "okv/workload/scripted.hpp"
#include "okv/workload/workload.hpp"

namespace okv {
namespace {

using K = HistoryOp::Kind;

TxnRecord txn(std::uint64_t ts, std::vector<HistoryOp> ops, bool committed = true) {
  TxnRecord r;
  r.ts = ts;
  r.committed = committed;
  r.ops = std::move(ops);
  return r;
}

TEST(CheckerTest, EmptyHistoryIsSerializable) {
  EXPECT_TRUE(check_serializability({}).ok());
}

TEST(CheckerTest, WriteSkewIsATwoCycle) {
  // Both read the initial x and y, then each writes one of them.
  auto h = std::vector<TxnRecord>{
      txn(1, {{K::kRead, 1, std::nullopt}, {K::kRead, 2, std::nullopt}, {K::kWrite, 1, "1:a"}}),
      txn(2, {{K::kRead, 1, std::nullopt}, {K::kRead, 2, std::nullopt}, {K::kWrite, 2, "2:b"}}),
  };
  auto v = check_serializability(h);
  EXPECT_FALSE(v.acyclic);
  ASSERT_EQ(v.witness.size(), 3u);  // two cycle steps plus the replay mismatch
  EXPECT_NE(v.witness[0].find("-rw->"), std::string::npos);
  EXPECT_NE(v.witness[1].find("-rw->"), std::string::npos);
  EXPECT_FALSE(v.replay_ok);
}

TEST(CheckerTest, ChainOfReadsFromIsSerializable) {
  auto h = std::vector<TxnRecord>{
      txn(1, {{K::kWrite, 1, "1:a"}}),
      txn(2, {{K::kRead, 1, "1:a"}, {K::kWrite, 1, "2:b"}}),
      txn(3, {{K::kRead, 1, "2:b"}}),
      txn(4, {{K::kRead, 1, "9:zzz"}, {K::kWrite, 1, "4:c"}}, false),
  };
  EXPECT_TRUE(check_serializability(h).ok());
  EXPECT_EQ(committed_state(h).at(1), "2:b");
}

TEST(CheckerTest, ReadingAnAbortedWriterIsFlagged) {
  auto h = std::vector<TxnRecord>{
      txn(1, {{K::kWrite, 1, "1:a"}}, false),
      txn(2, {{K::kRead, 1, "1:a"}}),
  };
  auto v = check_serializability(h);
  EXPECT_FALSE(v.recoverable);
  EXPECT_FALSE(v.ok());
}

TEST(CheckerTest, StaleReadBreaksTimestampReplay) {
  // t3 read the initial value although t2 (earlier) wrote it.
  auto h = std::vector<TxnRecord>{
      txn(2, {{K::kWrite, 1, "2:a"}}),
      txn(3, {{K::kRead, 1, std::nullopt}, {K::kWrite, 5, "3:x"}}),
  };
  auto v = check_serializability(h);
  EXPECT_FALSE(v.replay_ok);
}

TEST(WorkloadTest, GeneratorIsDeterministic) {
  WorkloadSpec s;
  s.kind = WorkloadKind::kZipfian;
  WorkloadGenerator a(s), b(s);
  for (int i = 0; i < 50; ++i) {
    auto x = a.next(), y = b.next();
    ASSERT_EQ(x.ops.size(), y.ops.size());
    for (std::size_t j = 0; j < x.ops.size(); ++j) {
      EXPECT_EQ(x.ops[j].key, y.ops[j].key);
      EXPECT_EQ(x.ops[j].payload, y.ops[j].payload);
    }
  }
}

TEST(WorkloadTest, ZipfianConcentratesOnLowRanks) {
  WorkloadSpec s;
  s.kind = WorkloadKind::kZipfian;
  s.key_space = 1000;
  s.ops_per_txn = 1;
  WorkloadGenerator g(s);
  int top = 0;
  for (int i = 0; i < 10000; ++i) top += g.next().ops[0].key < 10;
  EXPECT_GT(top, 3000);
}

ProxyConfig cfg(ExecMode mode) {
  ProxyConfig c;
  c.geometry = {5, 4, 6, 3, 64};
  c.epoch = {4, 8, 8, 1};
  c.block_size = 96;
  c.mode = mode;
  c.parallel = {2, 16};
  c.max_epoch_txns = 128;
  return c;
}

class RunnerModes : public ::testing::TestWithParam<ExecMode> {};

TEST_P(RunnerModes, ContendedRunIsSerializable) {
  Deployment d({cfg(GetParam())});
  WorkloadSpec s;
  s.key_space = 40;
  s.txns = 150;
  s.sessions = 10;
  s.hot_keys = 3;
  s.hot_ratio = 0.6;
  s.seed = 7;
  auto r = Runner(d, s).run();
  EXPECT_EQ(r.committed + r.aborted, 150u);
  EXPECT_GT(r.committed, 20u);
  EXPECT_GT(r.aborted, 0u);
  EXPECT_TRUE(r.serializability.ok()) << (r.serializability.witness.empty() ? "" : r.serializability.witness[0]);
}

TEST_P(RunnerModes, SmallBankKeepsMoneyAndIsSerializable) {
  Deployment d({cfg(GetParam())});
  WorkloadSpec s;
  s.kind = WorkloadKind::kSmallBank;
  s.key_space = 20;
  s.txns = 120;
  s.sessions = 8;
  s.seed = 3;
  auto r = Runner(d, s).run();
  EXPECT_TRUE(r.serializability.ok());
  // Transfers move money, deposits add it; the ledger must match the
  // committed deposits exactly.
  long long deposits = 0;
  for (const auto& t : r.history) {
    if (!t.committed) continue;
    std::map<Key, long long> before;
    for (const auto& op : t.ops) {
      if (op.kind == HistoryOp::Kind::kRead && !before.contains(op.key)) {
        before[op.key] = op.value ? std::stoll(value_payload(*op.value)) : 0;
      }
    }
    std::map<Key, long long> after = before;
    for (const auto& op : t.ops) {
      if (op.kind == HistoryOp::Kind::kWrite) after[op.key] = std::stoll(value_payload(*op.value));
    }
    for (const auto& [k, x] : after) deposits += x - before[k];
  }
  long long total = 0;
  for (const auto& [k, val] : committed_state(r.history)) total += std::stoll(value_payload(val));
  EXPECT_EQ(total, deposits);
}

TEST_P(RunnerModes, ScriptedHistoryMatchesTheWalkthrough) {
  Deployment d({cfg(GetParam())});
  auto r = run_scripted_history(d);
  EXPECT_TRUE(r.committed["t1"]);
  EXPECT_FALSE(r.committed["t2"]);
  EXPECT_TRUE(r.committed["t3"]);
  EXPECT_FALSE(r.committed["t4"]);
  EXPECT_TRUE(r.t2_aborted_on_write);
  EXPECT_TRUE(r.t3_depends_on_t1);
  EXPECT_TRUE(r.d_served_from_cache);
  EXPECT_TRUE(r.b_spilled_to_second_batch);
  EXPECT_EQ(r.batch_real_reads, (std::vector<std::uint64_t>{3, 1}));
  ASSERT_EQ(r.write_batch.size(), 2u);
  EXPECT_EQ(value_payload(r.write_batch.at("a")), "a1");
  EXPECT_EQ(value_payload(r.write_batch.at("c")), "c2");
}

INSTANTIATE_TEST_SUITE_P(Modes, RunnerModes,
                         ::testing::Values(ExecMode::kSequential, ExecMode::kParallel));

TEST(Config, ParsesTableKeysAndRoundTrips) {
  auto c = parse_config(R"(
# small tree
[tree]
L = 5
Z = 4
S = 7
A = 3
N = 100
[epoch]
R = 2
b_read = 32
b_write = 16
delta = 2
[proxy]
mode = sequential
integrity = off
latency_ms = 2.5
workload = zipfian
zipf_theta = 0.8
)");
  EXPECT_EQ(c.proxy.geometry, (TreeGeometry{5, 4, 7, 3, 100}));
  EXPECT_EQ(c.proxy.epoch.read_batches, 2u);
  EXPECT_EQ(c.proxy.epoch.read_batch_size, 32u);
  EXPECT_EQ(c.proxy.epoch.delta, 2u);
  EXPECT_EQ(c.proxy.mode, ExecMode::kSequential);
  EXPECT_FALSE(c.proxy.integrity);
  EXPECT_EQ(c.latency.count(), 2500);
  EXPECT_EQ(c.workload.kind, WorkloadKind::kZipfian);

  auto again = parse_config(dump_config(c));
  EXPECT_EQ(dump_config(again), dump_config(c));
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("Q = 1"), ConfigError);
  EXPECT_THROW(parse_config("L = seven"), ConfigError);
  EXPECT_THROW(parse_config("L 7"), ConfigError);
  EXPECT_THROW(parse_config("mode = fast"), ConfigError);
  // Geometry too small for the capacity.
  EXPECT_THROW(parse_config("L = 2\nN = 1000"), ConfigError);
}

}  // namespace
}  // namespace okv
