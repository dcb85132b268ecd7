#include "okv/workload/runner.hpp"

#include <algorithm>
#include <chrono>

namespace okv {

Proxy& open_with_recovery(Deployment& d, CrashSchedule* crashes, std::uint64_t* crash_count) {
  HookFn hook = crashes ? crashes->hook() : HookFn{};
  while (true) {
    try {
      return d.restart(hook);
    } catch (const CrashInjected&) {
      if (crash_count) ++*crash_count;
    }
  }
}

Runner::Runner(Deployment& d, WorkloadSpec spec) : d_(d), gen_(spec) {
  sessions_.resize(spec.sessions);
}

void Runner::finish(Session& s, bool committed) {
  s.record.committed = committed;
  s.record.end_tick = ticks_;
  ++(committed ? report_.committed : report_.aborted);
  report_.history.push_back(std::move(s.record));
  s = Session{};
}

bool Runner::advance(Session& s) {
  auto& p = d_.proxy();
  if (s.state == Session::State::kIdle) {
    if (issued_ >= gen_.spec().txns) return false;
    auto t = p.begin();
    if (!t) return false;
    ++issued_;
    s.state = Session::State::kRunning;
    s.program = gen_.next();
    s.record.ts = *t;
    s.record.begin_tick = ticks_;
  }
  if (s.state == Session::State::kWaiting) {
    switch (p.commit_status(s.record.ts)) {
      case CommitStatus::kCommitted: finish(s, true); return true;
      case CommitStatus::kAborted:
      case CommitStatus::kUnknown: finish(s, false); return true;
      case CommitStatus::kPending: return false;
    }
  }
  const TxnId t = s.record.ts;
  while (s.pc < s.program.ops.size()) {
    const auto& op = s.program.ops[s.pc];
    if (op.kind == TxnOp::Kind::kRead) {
      auto r = p.read(t, op.key);
      if (r.status == ReadStatus::kPending) return false;
      if (r.status == ReadStatus::kAborted) {
        finish(s, false);
        return true;
      }
      std::optional<std::string> value;
      if (r.value) value = std::string(r.value->begin(), r.value->end());
      s.last_read[op.key] = value;
      s.record.ops.push_back({HistoryOp::Kind::kRead, op.key, value});
    } else {
      std::string payload = op.payload;
      if (op.kind == TxnOp::Kind::kAdd) {
        std::int64_t base = 0;
        if (auto it = s.last_read.find(op.key); it != s.last_read.end() && it->second) {
          base = std::stoll(value_payload(*it->second));
        }
        payload = std::to_string(base + op.amount);
      }
      const std::string value = encode_value(t, payload);
      if (!p.write(t, op.key, to_bytes(value))) {
        finish(s, false);
        return true;
      }
      s.last_read[op.key] = value;
      s.record.ops.push_back({HistoryOp::Kind::kWrite, op.key, value});
    }
    ++s.pc;
  }
  p.commit(t);
  s.state = Session::State::kWaiting;
  return true;
}

void Runner::after_crash() {
  auto& p = d_.proxy();
  for (auto& s : sessions_) {
    if (s.state == Session::State::kIdle) continue;
    // Fates decided before the crash are still on record.
    finish(s, p.commit_status(s.record.ts) == CommitStatus::kCommitted);
  }
}

void Runner::tick_with_recovery(const RunOptions& opts) {
  try {
    d_.proxy().tick();
  } catch (const CrashInjected&) {
    ++report_.crashes;
    open_with_recovery(d_, opts.crashes, &report_.crashes);
    ++report_.recoveries;
    after_crash();
  }
  ++ticks_;
}

RunReport Runner::run(const RunOptions& opts) {
  report_ = {};
  if (!d_.has_proxy()) {
    open_with_recovery(d_, opts.crashes, &report_.crashes);
  } else if (opts.crashes) {
    d_.proxy().set_hook(opts.crashes->hook());
  }
  const auto start = std::chrono::steady_clock::now();
  const auto first_epoch = d_.proxy().epoch();
  auto busy = [&] {
    return issued_ < gen_.spec().txns ||
           std::any_of(sessions_.begin(), sessions_.end(),
                       [](const Session& s) { return s.state != Session::State::kIdle; });
  };
  while (busy() && ticks_ < opts.max_ticks) {
    for (bool progress = true; progress;) {
      progress = false;
      for (auto& s : sessions_) {
        while (advance(s)) progress = true;
      }
    }
    if (!busy()) break;
    tick_with_recovery(opts);
  }
  if (opts.drain) {
    // No new work: the open epoch ends, which settles every session.
    while (d_.proxy().tick_index() != 0) tick_with_recovery(opts);
    for (auto& s : sessions_) {
      if (s.state == Session::State::kIdle) continue;
      finish(s, d_.proxy().commit_status(s.record.ts) == CommitStatus::kCommitted);
    }
  }
  const auto end = std::chrono::steady_clock::now();
  report_.seconds = std::chrono::duration<double>(end - start).count();
  report_.throughput = report_.seconds > 0 ? report_.committed / report_.seconds : 0;
  report_.ticks = ticks_;
  report_.epochs = d_.proxy().epoch() - first_epoch;
  report_.stash_high_water = d_.proxy().stats().stash_high_water;

  std::vector<double> lat;
  for (const auto& t : report_.history) {
    if (t.committed) lat.push_back(static_cast<double>(t.end_tick - t.begin_tick));
  }
  if (!lat.empty()) {
    std::sort(lat.begin(), lat.end());
    double sum = 0;
    for (double x : lat) sum += x;
    report_.latency_ticks = {sum / lat.size(), lat[lat.size() / 2],
                             lat[std::min(lat.size() - 1, lat.size() * 99 / 100)]};
  }
  report_.serializability = check_serializability(report_.history);
  return std::move(report_);
}

std::map<Key, std::string> read_back(Proxy& p, const std::vector<Key>& keys) {
  std::map<Key, std::string> out;
  const std::size_t chunk = std::max<std::size_t>(1, p.config().epoch.read_batch_size / 2);
  for (std::size_t i = 0; i < keys.size(); i += chunk) {
    const std::size_t end = std::min(keys.size(), i + chunk);
    for (int attempt = 0;; ++attempt) {
      if (attempt > 16) throw std::runtime_error("read_back made no progress");
      auto t = p.begin();
      if (!t) {
        p.tick();
        continue;
      }
      std::map<Key, std::optional<Bytes>> got;
      bool aborted = false;
      for (int ticks = 0; !aborted && got.size() < end - i; ++ticks) {
        for (std::size_t j = i; j < end; ++j) {
          if (got.contains(keys[j])) continue;
          auto r = p.read(*t, keys[j]);
          if (r.status == ReadStatus::kValue) got[keys[j]] = std::move(r.value);
          if (r.status == ReadStatus::kAborted) aborted = true;
        }
        if (!aborted && got.size() < end - i) p.tick();
      }
      if (aborted) {
        // Usually no read batch left this epoch; try again in the next.
        p.tick();
        continue;
      }
      p.commit(*t);
      for (auto& [k, v] : got) {
        if (v) out[k] = to_string(*v);
      }
      break;
    }
  }
  return out;
}

}  // namespace okv
