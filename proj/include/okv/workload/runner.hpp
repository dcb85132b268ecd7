#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "okv/durability/crash.hpp"
#include "okv/workload/deployment.hpp"
#include "okv/workload/history.hpp"
#include "okv/workload/workload.hpp"

namespace okv {

struct RunOptions {
  CrashSchedule* crashes = nullptr;
  // Give up after this many ticks even if transactions remain.
  std::uint64_t max_ticks = 1'000'000;
  // Tick until the epoch in progress ends once the workload is done, so the
  // last transactions learn their fate.
  bool drain = true;
};

struct LatencySummary {
  double mean = 0;
  double p50 = 0;
  double p99 = 0;
};

struct RunReport {
  std::uint64_t committed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t ticks = 0;
  std::uint64_t epochs = 0;
  std::uint64_t crashes = 0;
  std::uint64_t recoveries = 0;
  double seconds = 0;
  double throughput = 0;      // committed transactions per second
  LatencySummary latency_ticks;
  std::size_t stash_high_water = 0;
  SerializabilityVerdict serializability;
  std::vector<TxnRecord> history;
};

/// Drives a fixed set of client sessions against the deployment's proxy from
/// one control thread: each round every session advances as far as it can,
/// then the proxy ticks. Crashes restart the proxy and recover.
class Runner {
 public:
  Runner(Deployment& d, WorkloadSpec spec);
  RunReport run(const RunOptions& opts = {});

 private:
  struct Session {
    enum class State { kIdle, kRunning, kWaiting } state = State::kIdle;
    TxnProgram program;
    std::size_t pc = 0;
    TxnRecord record;
    std::map<Key, std::optional<std::string>> last_read;
  };

  bool advance(Session& s);
  void finish(Session& s, bool committed);
  void tick_with_recovery(const RunOptions& opts);
  void after_crash();

  Deployment& d_;
  WorkloadGenerator gen_;
  std::vector<Session> sessions_;
  std::uint64_t issued_ = 0;
  std::uint64_t ticks_ = 0;
  RunReport report_;
};

// Opens the deployment's proxy, recovering through crashes the schedule
// injects during recovery itself.
Proxy& open_with_recovery(Deployment& d, CrashSchedule* crashes, std::uint64_t* crash_count);

// Committed values of `keys` as string, absent keys left out. Uses short
// read-only transactions and ticks the proxy as needed.
std::map<Key, std::string> read_back(Proxy& p, const std::vector<Key>& keys);

}  // namespace okv
