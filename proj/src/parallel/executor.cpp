#include "okv/parallel/executor.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace okv {

WriteBucketReq seal_bucket(const Sealer& sealer, BucketId b, const BucketImage& image) {
  WriteBucketReq w;
  w.bucket = b;
  w.version = image.meta.version;
  w.slots.reserve(image.plaintexts.size());
  for (std::size_t s = 0; s < image.plaintexts.size(); ++s) {
    const auto id = FreshnessId::tree(b, static_cast<std::uint32_t>(s), image.meta.version,
                                      image.meta.stamp);
    w.slots.push_back(sealer.seal(image.plaintexts[s], id, image.ivs[s]).data);
  }
  return w;
}

Bytes DirectIo::read_slot(BucketId b, SlotIndex s, const BucketMeta& meta, const ReadTag& tag) {
  auto fetch = client_.read_slot(b, s, &tag);
  return sealer_.open(Envelope{std::move(fetch.envelope)},
                      FreshnessId::tree(b, s, meta.version, meta.stamp));
}

void DirectIo::write_bucket(BucketId b, const BucketImage& image) {
  client_.write_bucket(seal_bucket(sealer_, b, image));
}

void PlanningIo::begin_rewrite(BucketId b, const BucketMeta& meta, const ReadTag& tag) {
  SeqOp op;
  op.kind = SeqOp::Kind::kRewriteBegin;
  op.bucket = b;
  op.version = meta.version;
  op.stamp = meta.stamp;
  op.tag = tag;
  op.unread = meta.valid_slots();
  trace_.push_back(std::move(op));
}

Bytes PlanningIo::read_slot(BucketId b, SlotIndex s, const BucketMeta& meta, const ReadTag& tag) {
  SeqOp op;
  op.kind = SeqOp::Kind::kRead;
  op.bucket = b;
  op.slot = s;
  op.version = meta.version;
  op.stamp = meta.stamp;
  op.tag = tag;
  trace_.push_back(std::move(op));
  const Key occupant = meta.slots.at(s).key;
  return occupant == kNoKey ? Bytes{} : RingOram::encode_real(occupant, {});
}

void PlanningIo::write_bucket(BucketId b, const BucketImage& image) {
  SeqOp op;
  op.kind = SeqOp::Kind::kWrite;
  op.bucket = b;
  op.version = image.meta.version;
  op.stamp = image.meta.stamp;
  trace_.push_back(std::move(op));
}

Round Executor::plan(const RingOram& engine, const RoundBody& body) const {
  RingOram clone = engine;
  PlanningIo io;
  Round round;
  clone.set_access_log(&round.accesses);
  body(clone, io);
  round.trace = io.take();
  round.plan = plan_epoch(round.trace, buffered());
  return round;
}

void SequentialExecutor::execute(RingOram& engine, const RoundBody& body, const Round&) {
  body(engine, io_);
}

void SequentialExecutor::flush(const std::function<void()>& after_first) {
  if (after_first) after_first();
}

namespace {

// Serves the data pass: buffered buckets from memory, everything else from
// the prefetched slots.
class BufferedIo : public BucketIo {
 public:
  BufferedIo(const ParallelExecutor::Fetched& fetched, std::map<BucketId, BucketImage>& buffer,
             std::set<BucketId>& ids)
      : fetched_(fetched), buffer_(buffer), ids_(ids) {}

  Bytes read_slot(BucketId b, SlotIndex s, const BucketMeta&, const ReadTag&) override {
    if (auto it = buffer_.find(b); it != buffer_.end()) return it->second.plaintexts.at(s);
    auto it = fetched_.find({b, s});
    if (it == fetched_.end()) throw std::logic_error("data pass read a slot the plan missed");
    return it->second;
  }
  void write_bucket(BucketId b, const BucketImage& image) override {
    buffer_[b] = image;
    ids_.insert(b);
  }

 private:
  const ParallelExecutor::Fetched& fetched_;
  std::map<BucketId, BucketImage>& buffer_;
  std::set<BucketId>& ids_;
};

}  // namespace

ParallelExecutor::ParallelExecutor(StorageClient& client, const Sealer& sealer,
                                   ParallelConfig cfg)
    : client_(client),
      sealer_(sealer),
      workers_(cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency())),
      max_batch_ops_(std::max<std::size_t>(1, cfg.max_batch_ops)) {}

void ParallelExecutor::reset() {
  buffer_.clear();
  buffered_ids_.clear();
}

void ParallelExecutor::parallel_chunks(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::exception_ptr failure;
  std::mutex mu;
#pragma omp parallel for num_threads(workers_) schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

ParallelExecutor::Fetched ParallelExecutor::fetch(const EpochPlan& plan) {
  const auto& ids = plan.reads;
  Fetched out;
  if (ids.empty()) return out;
  const std::size_t per_msg =
      std::min(max_batch_ops_, (ids.size() + workers_ - 1) / workers_);
  const std::size_t msgs = (ids.size() + per_msg - 1) / per_msg;
  std::vector<Bytes> plain(ids.size());

  parallel_chunks(msgs, [&](std::size_t m) {
    const std::size_t lo = m * per_msg, hi = std::min(ids.size(), lo + per_msg);
    std::vector<ReadSlotReq> reqs;
    std::vector<ReadTag> tags;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& op = plan.ops[ids[i]];
      reqs.push_back({op.bucket, op.slot});
      tags.push_back(op.tag);
    }
    auto got = client_.read_slots(reqs, tags);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& op = plan.ops[ids[i]];
      plain[i] = sealer_.open(Envelope{std::move(got[i - lo].envelope)},
                              FreshnessId::tree(op.bucket, op.slot, op.version, op.stamp));
    }
  });

  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& op = plan.ops[ids[i]];
    out.emplace(std::make_pair(op.bucket, op.slot), std::move(plain[i]));
  }
  return out;
}

void ParallelExecutor::execute(RingOram& engine, const RoundBody& body, const Round& round) {
  const Fetched fetched = fetch(round.plan);
  BufferedIo io(fetched, buffer_, buffered_ids_);
  body(engine, io);
}

void ParallelExecutor::flush(const std::function<void()>& after_first) {
  std::vector<const std::pair<const BucketId, BucketImage>*> items;
  for (const auto& kv : buffer_) items.push_back(&kv);
  if (items.empty()) {
    if (after_first) after_first();
    return;
  }
  const std::size_t per_msg =
      std::min(max_batch_ops_, (items.size() + workers_ - 1) / workers_);
  const std::size_t msgs = (items.size() + per_msg - 1) / per_msg;
  auto send = [&](std::size_t m) {
    const std::size_t lo = m * per_msg, hi = std::min(items.size(), lo + per_msg);
    std::vector<WriteBucketReq> ws;
    for (std::size_t i = lo; i < hi; ++i) {
      ws.push_back(seal_bucket(sealer_, items[i]->first, items[i]->second));
    }
    client_.write_buckets(std::move(ws));
  };
  send(0);
  if (after_first) after_first();
  if (msgs > 1) parallel_chunks(msgs - 1, [&](std::size_t m) { send(m + 1); });
  reset();
}

}  // namespace okv
