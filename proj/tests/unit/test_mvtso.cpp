#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include "okv/txn/mvtso.hpp"

namespace okv {
namespace {

Bytes v(const std::string& s) { return to_bytes(s); }

// Reference interpreter over an event log. A write by t conflicts when a
// reader with a larger timestamp observed a live version older than t (or
// another reader observed t's own version), which is the textbook rule
// stated without read markers.
class ReferenceMvtso {
 public:
  struct ReadEvent {
    TxnId reader;
    Key key;
    TxnId observed;
  };
  struct Write {
    TxnId writer;
    Key key;
    std::string value;
  };

  explicit ReferenceMvtso(std::map<Key, std::string> base) : base_(std::move(base)) {}

  void begin(TxnId t) { status_[t] = TxnStatus::kActive; }

  std::pair<std::optional<std::string>, TxnId> read(TxnId t, Key k) {
    TxnId best = 0;
    std::optional<std::string> value;
    if (base_.contains(k)) value = base_.at(k);
    for (const auto& w : writes_) {
      if (w.key == k && live(w.writer) && w.writer <= t && w.writer >= best) {
        best = w.writer;
        value = w.value;
      }
    }
    reads_.push_back({t, k, best});
    return {value, best};
  }

  bool write(TxnId t, Key k, const std::string& value) {
    for (const auto& r : reads_) {
      if (r.key != k || r.reader <= t || !live(r.observed)) continue;
      bool conflict = r.observed == t;
      if (r.observed < t) {
        // Conflict only if no live version sits between what r saw and t.
        conflict = true;
        for (const auto& w : writes_) {
          if (w.key == k && live(w.writer) && w.writer > r.observed && w.writer < t) {
            conflict = false;
          }
        }
      }
      if (conflict) {
        abort(t);
        return false;
      }
    }
    for (auto& w : writes_) {
      if (w.writer == t && w.key == k) {
        w.value = value;
        return true;
      }
    }
    writes_.push_back({t, k, value});
    return true;
  }

  void complete(TxnId t) {
    if (status_[t] == TxnStatus::kActive) status_[t] = TxnStatus::kCompleted;
  }

  void abort(TxnId t) {
    if (status_[t] == TxnStatus::kAborted) return;
    status_[t] = TxnStatus::kAborted;
    for (const auto& r : reads_) {
      if (r.observed == t && r.reader != t) abort(r.reader);
    }
  }

  std::map<TxnId, bool> resolve() {
    for (auto& [t, s] : status_) {
      if (s == TxnStatus::kActive) abort(t);
    }
    std::map<TxnId, bool> out;
    for (auto& [t, s] : status_) {
      if (s == TxnStatus::kCompleted) s = TxnStatus::kCommitted;
      out[t] = s == TxnStatus::kCommitted;
    }
    return out;
  }

  TxnStatus status(TxnId t) const { return status_.at(t); }

 private:
  bool live(TxnId w) const { return w == 0 || status_.at(w) != TxnStatus::kAborted; }

  std::map<Key, std::string> base_;
  std::map<TxnId, TxnStatus> status_;
  std::vector<ReadEvent> reads_;
  std::vector<Write> writes_;
};

TEST(MvtsoTest, TimestampsIncreaseAndFollowEpochs) {
  Mvtso m;
  auto a = m.begin(1), b = m.begin(1);
  EXPECT_LT(a, b);
  auto c = m.begin(2);
  EXPECT_LT(b, c);
  EXPECT_EQ(epoch_of(c), 2u);
}

TEST(MvtsoTest, ConcurrentBeginsAreUnique) {
  Mvtso m;
  std::vector<std::vector<TxnId>> got(8);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      for (int j = 0; j < 125; ++j) got[i].push_back(m.begin(3));
    });
  }
  for (auto& t : threads) t.join();
  std::set<TxnId> all;
  for (const auto& g : got) all.insert(g.begin(), g.end());
  EXPECT_EQ(all.size(), 1000u);
}

TEST(MvtsoTest, MissingBaseAsksForAFetch) {
  Mvtso m;
  auto t = m.begin(1);
  EXPECT_TRUE(m.read(t, 5).needs_base);
  m.install_base(5, std::nullopt);
  auto r = m.read(t, 5);
  EXPECT_FALSE(r.needs_base);
  EXPECT_FALSE(r.value);
}

TEST(MvtsoTest, ExampleEpochFromTheBatchingWalkthrough) {
  Mvtso m;
  for (Key k : {1, 2, 3, 4}) m.install_base(k, v("0"));
  const Key a = 1, c = 3, d = 4;
  auto t1 = m.begin(1), t2 = m.begin(1), t3 = m.begin(1), t4 = m.begin(1);
  m.read(t1, a);
  ASSERT_TRUE(m.write(t1, a, v("a1")));
  m.read(t2, d);
  m.read(t3, d);  // marker on d0 becomes t3
  auto r = m.read(t3, a);
  EXPECT_EQ(r.writer, t1);
  EXPECT_TRUE(m.transaction(t3)->deps.contains(t1));
  EXPECT_FALSE(m.write(t2, d, v("d2")));
  EXPECT_EQ(m.status(t2), TxnStatus::kAborted);
  ASSERT_TRUE(m.write(t3, c, v("c2")));
  ASSERT_TRUE(m.write(t1, c, v("c1")));
  ASSERT_TRUE(m.write(t4, 5, v("e4")));
  m.complete(t1);
  m.complete(t3);
  auto fates = m.resolve_epoch(16);
  EXPECT_TRUE(fates[t1]);
  EXPECT_FALSE(fates[t2]);
  EXPECT_TRUE(fates[t3]);
  EXPECT_FALSE(fates[t4]);
  auto w = m.committed_writes();
  EXPECT_EQ(w.size(), 2u);
  EXPECT_EQ(w.at(a), v("a1"));
  EXPECT_EQ(w.at(c), v("c2"));
}

TEST(MvtsoTest, AbortCascadesAndExcisesVersions) {
  Mvtso m;
  m.install_base(1, v("0"));
  auto t1 = m.begin(1), t2 = m.begin(1), t3 = m.begin(1);
  m.write(t1, 1, v("x"));
  m.read(t2, 1);
  m.write(t2, 2, v("y"));
  m.read(t3, 2);
  m.abort(t1);
  EXPECT_EQ(m.status(t2), TxnStatus::kAborted);
  EXPECT_EQ(m.status(t3), TxnStatus::kAborted);
  auto t4 = m.begin(1);
  EXPECT_EQ(m.read(t4, 1).value, v("0"));
  EXPECT_TRUE(m.read(t4, 2).needs_base);
}

TEST(MvtsoTest, WriteBatchOverflowAbortsLowestTimestampWriters) {
  Mvtso m;
  std::vector<TxnId> ts;
  for (Key k = 0; k < 5; ++k) {
    auto t = m.begin(1);
    m.write(t, k, v("v"));
    m.complete(t);
    ts.push_back(t);
  }
  auto fates = m.resolve_epoch(3);
  EXPECT_FALSE(fates[ts[0]]);
  EXPECT_FALSE(fates[ts[1]]);
  EXPECT_TRUE(fates[ts[2]]);
  EXPECT_EQ(m.committed_writes().size(), 3u);
}

// Drives both implementations through the same script and compares every
// observable.
struct Step {
  int txn;
  int kind;  // 0 read, 1 write, 2 complete, 3 abort
  Key key;
};

void compare(const std::vector<Step>& steps, int txns, int keys) {
  Mvtso m;
  std::map<Key, std::string> base;
  for (int k = 0; k < keys; ++k) {
    base[k] = "base" + std::to_string(k);
    m.install_base(k, v(base[k]));
  }
  ReferenceMvtso ref(base);
  std::vector<TxnId> ids;
  for (int i = 0; i < txns; ++i) {
    ids.push_back(m.begin(1));
    ref.begin(ids.back());
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const TxnId t = ids[s.txn];
    if (m.status(t) != TxnStatus::kActive) {
      ASSERT_NE(ref.status(t), TxnStatus::kActive);
      continue;
    }
    ASSERT_EQ(ref.status(t), TxnStatus::kActive);
    switch (s.kind) {
      case 0: {
        auto got = m.read(t, s.key);
        auto want = ref.read(t, s.key);
        ASSERT_EQ(got.writer, want.second) << "step " << i;
        ASSERT_EQ(got.value, v(*want.first)) << "step " << i;
        break;
      }
      case 1: {
        const std::string val = "w" + std::to_string(i);
        ASSERT_EQ(m.write(t, s.key, v(val)), ref.write(t, s.key, val)) << "step " << i;
        break;
      }
      case 2:
        m.complete(t);
        ref.complete(t);
        break;
      default:
        m.abort(t);
        ref.abort(t);
    }
    for (TxnId x : ids) ASSERT_EQ(m.status(x), ref.status(x)) << "step " << i;
  }
  EXPECT_EQ(m.resolve_epoch(1000), ref.resolve());
}

TEST(MvtsoTest, RandomHistoriesMatchReferenceInterpreter) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const int txns = 2 + static_cast<int>(gen() % 4);
    const int keys = 1 + static_cast<int>(gen() % 3);
    std::vector<Step> steps;
    for (int i = 0; i < 14; ++i) {
      const auto r = gen() % 20;
      steps.push_back({static_cast<int>(gen() % txns), r < 9 ? 0 : r < 17 ? 1 : r < 19 ? 2 : 3,
                       gen() % keys});
    }
    compare(steps, txns, keys);
    if (HasFatalFailure()) {
      ADD_FAILURE() << "trial " << trial;
      return;
    }
  }
}

TEST(MvtsoTest, ExhaustiveInterleavingsOfThreeReadWriteTransactions) {
  // Each transaction reads one key then writes one key (2 keys, so 4
  // programs each), then completes; all interleavings of the six
  // data operations.
  int histories = 0;
  for (int prog = 0; prog < 64; ++prog) {
    std::vector<std::pair<Key, Key>> p;
    for (int i = 0; i < 3; ++i) p.push_back({(prog >> (2 * i)) & 1, (prog >> (2 * i + 1)) & 1});
    std::vector<int> order = {0, 0, 1, 1, 2, 2};
    do {
      std::vector<Step> steps;
      int seen[3] = {0, 0, 0};
      for (int txn : order) {
        const int n = seen[txn]++;
        steps.push_back({txn, n, n == 0 ? p[txn].first : p[txn].second});
      }
      for (int txn = 0; txn < 3; ++txn) steps.push_back({txn, 2, 0});
      compare(steps, 3, 2);
      if (HasFatalFailure()) return;
      ++histories;
    } while (std::next_permutation(order.begin(), order.end()));
  }
  EXPECT_EQ(histories, 64 * 90);
}

TEST(MvtsoTest, ResolveMatchesBruteForceClosureOnRandomDependencyGraphs) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 8);
    Mvtso m;
    std::vector<TxnId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(m.begin(1));
    // Transaction i writes key i; a dependency j -> i is created by i
    // reading key j (j < i, so the version is visible).
    std::vector<std::set<int>> deps(n);
    for (int i = 0; i < n; ++i) m.write(ids[i], i, v("x"));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (gen() % 3 == 0) {
          deps[i].insert(j);
          m.read(ids[i], j);
        }
      }
    }
    std::vector<bool> finished(n);
    for (int i = 0; i < n; ++i) {
      finished[i] = gen() % 4 != 0;
      if (finished[i]) m.complete(ids[i]);
    }
    // Fixed point: commit iff finished and every dependency commits.
    std::vector<bool> ok = finished;
    for (bool changed = true; changed;) {
      changed = false;
      for (int i = 0; i < n; ++i) {
        for (int j : deps[i]) {
          if (ok[i] && !ok[j]) {
            ok[i] = false;
            changed = true;
          }
        }
      }
    }
    auto fates = m.resolve_epoch(1000);
    for (int i = 0; i < n; ++i) ASSERT_EQ(fates[ids[i]], ok[i]) << "trial " << trial;
  }
}

}  // namespace
}  // namespace okv
