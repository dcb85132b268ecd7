#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "okv/durability/crash.hpp"
#include "okv/proxy/proxy.hpp"
#include "okv/workload/workload.hpp"

namespace okv {

struct SweepOptions {
  std::uint64_t epochs = 3;  // crash in each of epochs 1..epochs
  bool nested = true;        // also crash again at every recovery hook
  // Epochs the workload keeps running after the last crash epoch.
  std::uint64_t tail_epochs = 2;
};

/// Outcome of one crash point (and optionally one nested recovery crash).
struct SweepCase {
  CrashPoint point;
  std::optional<Hook> nested;
  bool reached = false;  // the primary crash point actually fired
  bool nested_fired = false;
  std::uint64_t recovered_epoch = 0;
  std::uint32_t replayed_batches = 0;

  bool committed_readable = false;   // committed writes read back after recovery
  bool crashed_epoch_gone = false;   // nothing of the recovered epoch survives
  bool replay_verbatim = false;      // replayed paths equal the logged ones
  bool converges = true;             // nested run ends where the plain one did
  bool serializable = false;
  std::string detail;

  bool ok() const {
    return reached && committed_readable && crashed_epoch_gone && replay_verbatim && converges &&
           serializable;
  }
};

struct CrashSweepReport {
  std::vector<SweepCase> cases;
  std::size_t failures() const;
};

// Every crash point a normal epoch passes through, for one epoch.
std::vector<CrashPoint> epoch_crash_points(std::uint64_t epoch, const EpochConfig& cfg);

/// Runs `workload` once per crash point with a crash there, recovers, and
/// checks what survived against the client-visible history. Each nested
/// variant repeats the run with a second crash inside recovery.
CrashSweepReport crash_sweep(const ProxyConfig& cfg, const WorkloadSpec& workload,
                             const SweepOptions& opts = {});

}  // namespace okv
