#include "okv/workload/bench.hpp"

#include <algorithm>
#include <map>

#include "okv/workload/runner.hpp"

namespace okv {

ModeMeasurement measure_mode(HarnessConfig cfg, ExecMode mode, std::uint64_t epochs) {
  cfg.proxy.mode = mode;
  cfg.data_dir.reset();
  ModeMeasurement m;
  m.mode = mode;

  Deployment d(cfg.deployment());
  auto& p = d.restart();
  d.trace().clear();
  const auto trips_before = p.client().round_trips();

  WorkloadSpec w = cfg.workload;
  w.txns = std::max<std::uint64_t>(w.txns, 1'000'000);
  RunOptions opts;
  opts.max_ticks = epochs * cfg.proxy.epoch.ticks_per_epoch();
  Runner runner(d, w);
  const auto report = runner.run(opts);

  m.epochs = report.epochs;
  m.committed = report.committed;
  m.seconds = report.seconds;
  m.round_trips = d.proxy().client().round_trips() - trips_before;
  const auto& e = cfg.proxy.epoch;
  m.logical_accesses =
      m.epochs * (std::uint64_t{e.read_batches} * e.read_batch_size + e.write_batch_size);
  if (m.seconds > 0) {
    m.txn_per_sec = static_cast<double>(m.committed) / m.seconds;
    m.access_per_sec = static_cast<double>(m.logical_accesses) / m.seconds;
  }

  std::map<std::uint64_t, std::uint64_t> root;
  for (const auto& ev : d.trace().snapshot()) {
    if (ev.kind == EventKind::kWrite && ev.bucket == 0) ++root[ev.epoch];
  }
  std::uint64_t total = 0;
  for (const auto& [epoch, n] : root) {
    total += n;
    m.max_root_writes = std::max(m.max_root_writes, n);
  }
  if (m.epochs > 0) m.root_writes_per_epoch = static_cast<double>(total) / m.epochs;
  return m;
}

}  // namespace okv
