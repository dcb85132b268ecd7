#include "okv/workload/crash_sweep.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "okv/observer/analysis.hpp"
#include "okv/txn/mvtso.hpp"
#include "okv/workload/deployment.hpp"
#include "okv/workload/runner.hpp"

namespace okv {
namespace {

struct Outcome {
  RunReport report;
  std::map<Key, std::string> state;
  std::map<BucketId, std::vector<Bytes>> buckets;
  std::optional<RecoveryReport> recovery;
  Trace trace;
  std::size_t fired = 0;
};

std::vector<Key> keys_of(const WorkloadSpec& w) {
  std::vector<Key> keys;
  for (std::uint64_t i = 0; i < w.key_space; ++i) keys.push_back(w.key_offset + i);
  return keys;
}

Outcome run_once(const ProxyConfig& cfg, const WorkloadSpec& w, std::vector<CrashPoint> points,
                 std::uint64_t max_ticks) {
  Outcome out;
  Deployment d({cfg});
  CrashSchedule crash(std::move(points));
  RunOptions opts;
  opts.crashes = &crash;
  opts.max_ticks = max_ticks;
  Runner runner(d, w);
  out.report = runner.run(opts);
  out.fired = crash.fired();
  out.recovery = d.proxy().last_recovery();
  out.trace = d.trace().snapshot();
  auto keys = keys_of(w);
  for (const auto& [k, v] : committed_state(out.report.history)) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  out.state = read_back(d.proxy(), keys);
  out.buckets = d.server()->buckets().snapshot();
  return out;
}

std::set<std::uint64_t> committed_set(const RunReport& r) {
  std::set<std::uint64_t> s;
  for (const auto& t : r.history) {
    if (t.committed) s.insert(t.ts);
  }
  return s;
}

void check(const Outcome& o, const ProxyConfig& cfg, SweepCase& c) {
  std::ostringstream why;
  c.serializable = o.report.serializability.ok();
  if (!c.serializable) {
    why << "history not serializable:";
    for (const auto& step : o.report.serializability.witness) why << ' ' << step;
    why << "; ";
  }

  const auto expect = committed_state(o.report.history);
  c.committed_readable = o.state == expect;
  if (!c.committed_readable) why << "read-back state differs from committed history; ";

  if (!o.recovery) {
    why << "no recovery happened; ";
    c.detail = why.str();
    return;
  }
  const auto& rec = *o.recovery;
  c.recovered_epoch = rec.epoch;
  c.replayed_batches = rec.batches;

  c.crashed_epoch_gone = true;
  for (const auto& t : o.report.history) {
    if (t.committed && epoch_of(t.ts) == rec.epoch) c.crashed_epoch_gone = false;
  }
  for (const auto& [k, v] : o.state) {
    if (epoch_of(value_writer(v)) == rec.epoch) c.crashed_epoch_gone = false;
  }
  if (!c.crashed_epoch_gone) why << "a write of epoch " << rec.epoch << " survived; ";

  c.replay_verbatim = rec.replayed == rec.logged &&
                      rec.logged.size() == std::size_t{rec.batches} * cfg.epoch.read_batch_size;
  if (cfg.mode == ExecMode::kSequential && c.replay_verbatim) {
    // What the server saw: the crashed run's read batches, then the replay.
    const auto reads = cfg.epoch.read_batches;
    Trace before, during;
    for (const auto& e : o.trace) {
      if (e.epoch != rec.epoch) continue;
      if (e.tick < reads) before.push_back(e);
      if (e.tick == reads + 1) during.push_back(e);
    }
    const auto seen = observed_accesses(before, cfg.geometry);
    const auto replayed = observed_accesses(during, cfg.geometry);
    c.replay_verbatim = replayed == rec.logged && seen.size() <= replayed.size() &&
                        std::equal(seen.begin(), seen.end(), replayed.begin());
  }
  if (!c.replay_verbatim) why << "replayed paths differ from the log; ";
  c.detail = why.str();
}

}  // namespace

std::size_t CrashSweepReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(cases.begin(), cases.end(), [](const SweepCase& c) { return !c.ok(); }));
}

std::vector<CrashPoint> epoch_crash_points(std::uint64_t epoch, const EpochConfig& cfg) {
  std::vector<CrashPoint> out;
  for (std::size_t i = 0; i < kHookCount; ++i) {
    const auto h = static_cast<Hook>(i);
    if (is_recovery_hook(h)) continue;
    const std::uint32_t n = is_per_batch_hook(h) ? cfg.read_batches : 1;
    for (std::uint32_t occ = 0; occ < n; ++occ) out.push_back({epoch, h, occ});
  }
  return out;
}

CrashSweepReport crash_sweep(const ProxyConfig& cfg, const WorkloadSpec& workload,
                             const SweepOptions& opts) {
  CrashSweepReport report;
  WorkloadSpec w = workload;
  w.txns = std::max<std::uint64_t>(w.txns, 1'000'000);  // bounded by ticks, not txns
  const std::uint64_t max_ticks = (opts.epochs + opts.tail_epochs) * cfg.epoch.ticks_per_epoch();

  std::vector<Hook> recovery_hooks;
  for (std::size_t i = 0; i < kHookCount; ++i) {
    if (is_recovery_hook(static_cast<Hook>(i))) recovery_hooks.push_back(static_cast<Hook>(i));
  }

  for (std::uint64_t e = 1; e <= opts.epochs; ++e) {
    for (const auto& point : epoch_crash_points(e, cfg.epoch)) {
      SweepCase plain;
      plain.point = point;
      const auto ref = run_once(cfg, w, {point}, max_ticks);
      check(ref, cfg, plain);
      plain.reached = ref.fired == 1;
      if (!plain.reached) plain.detail += "crash point never reached; ";
      report.cases.push_back(plain);
      if (!opts.nested || !ref.recovery) continue;

      for (Hook h : recovery_hooks) {
        SweepCase nested;
        nested.point = point;
        nested.nested = h;
        // Replay hooks are per batch; aim at the last replayed batch.
        const std::uint32_t occ =
            is_per_batch_hook(h) ? std::max<std::uint32_t>(ref.recovery->batches, 1) - 1 : 0;
        const auto got = run_once(cfg, w, {point, {ref.recovery->epoch, h, occ}}, max_ticks);
        check(got, cfg, nested);
        nested.reached = got.fired >= 1;
        nested.nested_fired = got.fired == 2;
        // Replay verbatim is judged on the plain run; a nested crash cuts
        // the first replay short by design.
        nested.replay_verbatim = got.recovery && got.recovery->replayed == got.recovery->logged;
        nested.converges = got.state == ref.state && got.buckets == ref.buckets &&
                           committed_set(got.report) == committed_set(ref.report);
        if (!nested.converges) nested.detail += "nested crash ended in a different state; ";
        report.cases.push_back(nested);
      }
    }
  }
  return report;
}

}  // namespace okv
