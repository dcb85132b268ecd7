#include "okv/parallel/plan.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace okv {

EpochPlan plan_epoch(const std::vector<SeqOp>& trace, const std::set<BucketId>& buffered_in) {
  EpochPlan plan;
  std::set<BucketId> buffered = buffered_in;
  std::set<BucketId> expanded;
  std::set<std::pair<BucketId, SlotIndex>> fetched;
  std::map<BucketId, std::size_t> last_meta;     // serializes metadata per bucket
  std::map<std::pair<std::uint64_t, BucketId>, std::size_t> meta_of;  // (op, bucket)
  std::map<BucketId, std::pair<std::uint64_t, WriteStamp>> final_write;

  auto meta_op = [&](const SeqOp& s) {
    const auto key = std::make_pair(s.tag.op, s.bucket);
    if (auto it = meta_of.find(key); it != meta_of.end()) return it->second;
    PhysicalOp m;
    m.kind = PhysicalOp::Kind::kMetadataUpdate;
    m.bucket = s.bucket;
    m.tag = s.tag;
    if (auto prev = last_meta.find(s.bucket); prev != last_meta.end()) {
      m.depends_on.push_back(prev->second);
    }
    plan.ops.push_back(std::move(m));
    const auto id = plan.ops.size() - 1;
    meta_of[key] = id;
    last_meta[s.bucket] = id;
    return id;
  };
  auto add_read = [&](const SeqOp& s, SlotIndex slot, std::size_t meta) {
    if (!fetched.emplace(s.bucket, slot).second) {
      throw std::logic_error("bucket invariant violated: slot " + std::to_string(slot) +
                             " of bucket " + std::to_string(s.bucket) + " read twice");
    }
    PhysicalOp r;
    r.kind = PhysicalOp::Kind::kSlotRead;
    r.bucket = s.bucket;
    r.slot = slot;
    r.version = s.version;
    r.stamp = s.stamp;
    r.tag = s.tag;
    r.depends_on.push_back(meta);
    plan.ops.push_back(std::move(r));
    plan.reads.push_back(plan.ops.size() - 1);
  };

  for (const auto& s : trace) {
    switch (s.kind) {
      case SeqOp::Kind::kRead: {
        const auto meta = meta_op(s);
        if (buffered.contains(s.bucket) || expanded.contains(s.bucket)) break;
        add_read(s, s.slot, meta);
        break;
      }
      case SeqOp::Kind::kRewriteBegin: {
        const auto meta = meta_op(s);
        if (buffered.contains(s.bucket) || expanded.contains(s.bucket)) break;
        expanded.insert(s.bucket);
        for (SlotIndex slot : s.unread) {
          if (!fetched.contains({s.bucket, slot})) add_read(s, slot, meta);
        }
        break;
      }
      case SeqOp::Kind::kWrite:
        buffered.insert(s.bucket);
        expanded.erase(s.bucket);
        // Only the final version of a bucket leaves the proxy.
        final_write[s.bucket] = {s.version, s.stamp};
        break;
    }
  }

  for (const auto& [b, vs] : final_write) {
    PhysicalOp w;
    w.kind = PhysicalOp::Kind::kBucketWrite;
    w.bucket = b;
    w.version = vs.first;
    w.stamp = vs.second;
    w.depends_on = plan.reads;
    if (auto m = last_meta.find(b); m != last_meta.end()) w.depends_on.push_back(m->second);
    plan.ops.push_back(std::move(w));
    plan.writes.push_back(plan.ops.size() - 1);
  }
  return plan;
}

std::vector<std::vector<std::size_t>> EpochPlan::waves() const {
  std::vector<std::size_t> level(ops.size(), 0);
  std::size_t depth = 0;
  // Ops are created after their dependencies, so one forward pass suffices.
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (auto d : ops[i].depends_on) {
      if (d >= i) throw std::logic_error("plan dependency points forward");
      level[i] = std::max(level[i], level[d] + 1);
    }
    depth = std::max(depth, level[i] + 1);
  }
  std::vector<std::vector<std::size_t>> out(depth);
  for (std::size_t i = 0; i < ops.size(); ++i) out[level[i]].push_back(i);
  return out;
}

}  // namespace okv
