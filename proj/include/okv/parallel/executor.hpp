#pragma once

#include <functional>
#include <map>
#include <set>
#include <vector>

#include "okv/crypto/envelope.hpp"
#include "okv/oram/ring_oram.hpp"
#include "okv/parallel/plan.hpp"
#include "okv/storage/client.hpp"

namespace okv {

// A round of logical ORAM operations. It is applied twice, to a planning
// clone and then to the live engine, and must issue the same operations
// both times.
using RoundBody = std::function<void(RingOram&, BucketIo&)>;

struct Round {
  std::vector<SeqOp> trace;
  std::vector<LoggedAccess> accesses;
  EpochPlan plan;
};

WriteBucketReq seal_bucket(const Sealer& sealer, BucketId b, const BucketImage& image);

/// Talks to storage directly, one round trip per slot read and per bucket
/// write. This is the sequential oracle's I/O.
class DirectIo : public BucketIo {
 public:
  DirectIo(StorageClient& client, const Sealer& sealer) : client_(client), sealer_(sealer) {}
  Bytes read_slot(BucketId b, SlotIndex s, const BucketMeta& meta, const ReadTag& tag) override;
  void write_bucket(BucketId b, const BucketImage& image) override;

 private:
  StorageClient& client_;
  const Sealer& sealer_;
};

/// Records the sequential physical trace and hands back placeholders, so a
/// clone of the engine can run a round without any data.
class PlanningIo : public BucketIo {
 public:
  void begin_rewrite(BucketId b, const BucketMeta& meta, const ReadTag& tag) override;
  Bytes read_slot(BucketId b, SlotIndex s, const BucketMeta& meta, const ReadTag& tag) override;
  void write_bucket(BucketId b, const BucketImage& image) override;
  std::vector<SeqOp> take() { return std::move(trace_); }

 private:
  std::vector<SeqOp> trace_;
};

class Executor {
 public:
  virtual ~Executor() = default;

  // Dry run on a clone of `engine`; nothing touches storage.
  Round plan(const RingOram& engine, const RoundBody& body) const;
  virtual void execute(RingOram& engine, const RoundBody& body, const Round& round) = 0;
  // Sends buffered bucket writes. `after_first` runs once the first chunk
  // has been acknowledged and before the rest go out.
  virtual void flush(const std::function<void()>& after_first = {}) = 0;
  virtual const std::set<BucketId>& buffered() const = 0;
  // Drops buffered state, e.g. after a crash.
  virtual void reset() = 0;
};

class SequentialExecutor : public Executor {
 public:
  SequentialExecutor(StorageClient& client, const Sealer& sealer) : io_(client, sealer) {}
  void execute(RingOram& engine, const RoundBody& body, const Round& round) override;
  void flush(const std::function<void()>& after_first = {}) override;
  const std::set<BucketId>& buffered() const override { return none_; }
  void reset() override {}

 private:
  DirectIo io_;
  std::set<BucketId> none_;
};

struct ParallelConfig {
  unsigned workers = 0;             // 0: hardware concurrency
  std::size_t max_batch_ops = 64;   // ops per BATCH message
};

/// Reads every planned slot up front, in parallel BATCH messages, then runs
/// the round on the live engine against the fetched data. Bucket writes are
/// buffered until flush(), which sends only the last version of each.
class ParallelExecutor : public Executor {
 public:
  ParallelExecutor(StorageClient& client, const Sealer& sealer, ParallelConfig cfg);
  void execute(RingOram& engine, const RoundBody& body, const Round& round) override;
  void flush(const std::function<void()>& after_first = {}) override;
  const std::set<BucketId>& buffered() const override { return buffered_ids_; }
  void reset() override;

  unsigned workers() const { return workers_; }
  const std::map<BucketId, BucketImage>& write_buffer() const { return buffer_; }

  using Fetched = std::map<std::pair<BucketId, SlotIndex>, Bytes>;
  Fetched fetch(const EpochPlan& plan);

 private:
  // Runs `n` chunks of work across the worker pool, rethrowing the first
  // failure after all chunks finish.
  void parallel_chunks(std::size_t n, const std::function<void(std::size_t)>& fn);

  StorageClient& client_;
  const Sealer& sealer_;
  unsigned workers_;
  std::size_t max_batch_ops_;
  std::map<BucketId, BucketImage> buffer_;
  std::set<BucketId> buffered_ids_;
};

}  // namespace okv
