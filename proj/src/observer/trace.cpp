#include "okv/observer/trace.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

constexpr const char* kHeader =
    "seq\tmsg\tepoch\ttick\tkind\tbucket\tslot\tversion\tpayload_len\trecord_type\tcounter\tsub"
    "\ttagged\tpurpose\tleaf\top";

TraceEvent event_for(const Op& op, const OpResult& res) {
  TraceEvent e;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ReadSlotReq>) {
          e.kind = EventKind::kRead;
          e.bucket = o.bucket;
          e.slot = o.slot;
          e.version = res.version;
          e.payload_len = res.items.empty() ? 0 : res.items.front().size();
        } else if constexpr (std::is_same_v<T, WriteBucketReq>) {
          e.kind = EventKind::kWrite;
          e.bucket = o.bucket;
          e.version = o.version;
          for (const auto& s : o.slots) e.payload_len += s.size();
        } else if constexpr (std::is_same_v<T, RollbackReq>) {
          e.kind = EventKind::kRollback;
          e.counter = o.target.evict_paths;
        } else if constexpr (std::is_same_v<T, LogAppendReq>) {
          e.kind = EventKind::kLogAppend;
          e.record_type = o.key.type;
          e.counter = o.key.counter;
          e.sub = o.key.sub;
          e.payload_len = o.record.size();
        } else if constexpr (std::is_same_v<T, LogReadReq>) {
          e.kind = EventKind::kLogRead;
          e.record_type = o.key.type;
          e.counter = o.key.counter;
          e.sub = o.key.sub;
          e.payload_len =
              res.status == Status::kOk && !res.items.empty() ? res.items.front().size() : 0;
        } else if constexpr (std::is_same_v<T, GcReq>) {
          e.kind = EventKind::kGc;
          e.counter = o.keep_from.evict_paths;
        } else {
          e.kind = EventKind::kReadBucket;
          e.bucket = o.bucket;
          e.version = res.version;
          for (const auto& s : res.items) e.payload_len += s.size();
        }
      },
      op);
  return e;
}

}  // namespace

void TraceRecorder::record_message(std::vector<TraceEvent> events) {
  std::lock_guard lock(mu_);
  const auto msg = next_msg_++;
  for (auto& e : events) {
    e.seq = next_seq_++;
    e.msg = msg;
    e.epoch = epoch_;
    e.tick = tick_;
    events_.push_back(std::move(e));
  }
}

Trace TraceRecorder::snapshot() const {
  std::lock_guard lock(mu_);
  return events_;
}

Trace TraceRecorder::take() {
  std::lock_guard lock(mu_);
  return std::move(events_);
}

void TraceRecorder::clear() {
  std::lock_guard lock(mu_);
  events_.clear();
}

std::size_t TraceRecorder::size() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

Bytes ObservedTransport::roundtrip(const Bytes& request, std::span<const ReadTag> tags) {
  Bytes reply = inner_.roundtrip(request, tags);
  const Request req = decode_request(request);
  const Response resp = decode_response(reply);
  std::vector<TraceEvent> events;
  events.reserve(req.ops.size());
  for (std::size_t i = 0; i < req.ops.size(); ++i) {
    static const OpResult kEmpty;
    auto e = event_for(req.ops[i], i < resp.results.size() ? resp.results[i] : kEmpty);
    if (i < tags.size()) {
      e.has_tag = true;
      e.purpose = tags[i].purpose;
      e.leaf = tags[i].leaf;
      e.op = tags[i].op;
    }
    events.push_back(std::move(e));
  }
  sink_.record_message(std::move(events));
  return reply;
}

void export_trace(const Trace& trace, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& e : trace) {
    out << e.seq << '\t' << e.msg << '\t' << e.epoch << '\t' << e.tick << '\t'
        << static_cast<int>(e.kind) << '\t' << e.bucket << '\t' << e.slot << '\t' << e.version
        << '\t' << e.payload_len << '\t' << static_cast<int>(e.record_type) << '\t' << e.counter
        << '\t' << e.sub << '\t' << (e.has_tag ? 1 : 0) << '\t' << static_cast<int>(e.purpose)
        << '\t' << e.leaf << '\t' << e.op << '\n';
  }
}

Trace import_trace(std::istream& in) {
  Trace out;
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw DecodeError("missing trace header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceEvent e;
    int kind = 0, rtype = 0, tagged = 0, purpose = 0;
    if (!(ls >> e.seq >> e.msg >> e.epoch >> e.tick >> kind >> e.bucket >> e.slot >> e.version >>
          e.payload_len >> rtype >> e.counter >> e.sub >> tagged >> purpose >> e.leaf >> e.op)) {
      throw DecodeError("malformed trace line: " + line);
    }
    if (kind < 0 || kind > 6 || purpose < 0 || purpose > 2) throw DecodeError("bad enum in trace");
    e.kind = static_cast<EventKind>(kind);
    e.record_type = static_cast<std::uint8_t>(rtype);
    e.has_tag = tagged != 0;
    e.purpose = static_cast<ReadPurpose>(purpose);
    out.push_back(e);
  }
  return out;
}

}  // namespace okv
