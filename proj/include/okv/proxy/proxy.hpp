#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <vector>

#include "okv/batch/batch_manager.hpp"
#include "okv/crypto/envelope.hpp"
#include "okv/durability/counter.hpp"
#include "okv/durability/crash.hpp"
#include "okv/durability/records.hpp"
#include "okv/oram/ring_oram.hpp"
#include "okv/parallel/executor.hpp"
#include "okv/storage/client.hpp"
#include "okv/txn/mvtso.hpp"

namespace okv {

enum class ExecMode { kSequential, kParallel };

struct ProxyConfig {
  TreeGeometry geometry;
  EpochConfig epoch;
  std::size_t block_size = 128;
  bool integrity = true;
  ExecMode mode = ExecMode::kParallel;
  ParallelConfig parallel;
  std::uint32_t full_checkpoint_every = 8;
  std::uint32_t stash_bound = 48;
  std::uint32_t max_epoch_txns = 1024;

  void validate() const;
  std::size_t value_capacity() const { return block_size - Sealer::kOverhead - 8; }
  CheckpointLimits limits() const;
};

enum class ReadStatus { kValue, kPending, kAborted };
struct ReadReply {
  ReadStatus status = ReadStatus::kPending;
  std::optional<Bytes> value;  // nullopt: key does not exist
  TxnId writer = 0;            // 0: committed before this epoch
};

enum class CommitStatus { kPending, kCommitted, kAborted, kUnknown };

struct ProxyStats {
  std::uint64_t epochs = 0;
  std::uint64_t recoveries = 0;
  std::uint64_t committed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t real_reads = 0;     // real slots in fired read batches
  std::uint64_t dirty_writes = 0;   // real entries in write batches
  std::size_t stash_high_water = 0;
};

struct RecoveryReport {
  std::uint64_t epoch = 0;
  std::uint32_t batches = 0;
  std::vector<LoggedAccess> logged;
  std::vector<LoggedAccess> replayed;
};

// Ticks within an epoch: 0..R-1 fire read batches, R ends the epoch.
// Recovery runs under tick R+1.
using ClockFn = std::function<void(std::uint64_t epoch, std::uint32_t tick)>;

/// The trusted proxy. Clients run transactions through begin/read/write/
/// commit; the driver calls tick() at the batch cadence. A CrashInjected
/// escaping any call leaves the object dead; start a new Proxy over the same
/// storage and counter and call open() to recover.
class Proxy {
 public:
  Proxy(ProxyConfig cfg, const KeyMaterial& keys, Transport& transport, TrustedCounter& counter);
  ~Proxy();

  // Bootstraps an empty store, or recovers the epoch a crash interrupted.
  void open();

  std::optional<TxnId> begin();  // nullopt: the epoch's transaction table is full
  ReadReply read(TxnId t, Key k);
  bool write(TxnId t, Key k, Bytes value);
  void commit(TxnId t);
  void abort(TxnId t);
  void tick();
  CommitStatus commit_status(TxnId t);

  void set_hook(HookFn fn) { hook_ = std::move(fn); }
  void set_clock(ClockFn fn) { clock_ = std::move(fn); }

  std::uint64_t epoch() const { return epoch_; }
  std::uint32_t tick_index() const { return tick_; }
  bool dead() const { return dead_; }
  const ProxyConfig& config() const { return cfg_; }
  const RingOram& engine() const { return *engine_; }
  const ProxyStats& stats() const { return stats_; }
  const std::optional<RecoveryReport>& last_recovery() const { return last_recovery_; }
  // Fates announced at the end of the last epoch.
  const std::map<TxnId, bool>& last_outcomes() const { return last_outcomes_; }
  // Real entries of the last write batch.
  const std::map<Key, Bytes>& last_write_batch() const { return last_write_batch_; }
  std::optional<Transaction> transaction(TxnId t) const { return mvtso_.transaction(t); }
  StorageClient& client() { return client_; }

 private:
  void bootstrap();
  void recover();
  void start_epoch(std::uint64_t e);
  void read_tick();
  void end_epoch();
  void fire(Hook h, std::uint32_t occurrence = 0);
  void set_clock_now(std::uint32_t tick);
  // Runs a round through the executor; `before_execute` fires between the
  // plan and the first physical operation.
  Round run_round(const RoundBody& body, const std::function<void(const Round&)>& before_execute);
  void write_checkpoint(std::uint8_t phase, const std::vector<bool>& committed);
  Checkpoint load_chain(std::uint64_t epoch, std::uint8_t phase);
  void collect_garbage();
  Iv record_iv(const LogKey& key) const;
  VersionTarget target_of(const std::vector<BucketMeta>& buckets, std::uint64_t access_count) const;
  template <class F>
  auto guarded(F&& f);

  ProxyConfig cfg_;
  KeyMaterial keys_;
  Sealer sealer_;
  StorageClient client_;
  TrustedCounter& counter_;
  std::unique_ptr<Executor> exec_;
  std::optional<RingOram> engine_;
  Mvtso mvtso_;
  BatchManager batches_;
  HookFn hook_;
  ClockFn clock_;
  std::recursive_mutex mu_;

  bool open_ = false;
  bool dead_ = false;
  std::uint64_t epoch_ = 0;
  std::uint32_t tick_ = 0;
  std::set<Key> new_keys_;
  std::map<TxnId, bool> outcomes_;
  std::map<TxnId, bool> last_outcomes_;
  std::map<Key, Bytes> last_write_batch_;
  std::pair<std::uint64_t, std::uint8_t> last_ckpt_{0, 0};
  std::vector<std::uint64_t> full_epochs_;
  ProxyStats stats_;
  std::optional<RecoveryReport> last_recovery_;
};

}  // namespace okv
