#pragma once

#include <cstdint>

#include "okv/workload/config.hpp"

namespace okv {

/// One execution mode driven for a fixed number of epochs.
struct ModeMeasurement {
  ExecMode mode = ExecMode::kParallel;
  std::uint64_t epochs = 0;
  std::uint64_t committed = 0;
  std::uint64_t logical_accesses = 0;  // path accesses, real and dummy
  std::uint64_t round_trips = 0;
  double seconds = 0;
  double txn_per_sec = 0;
  double access_per_sec = 0;
  // Writes of the root bucket the server received, per epoch.
  double root_writes_per_epoch = 0;
  std::uint64_t max_root_writes = 0;
};

// Bootstrap is excluded from the timing.
ModeMeasurement measure_mode(HarnessConfig cfg, ExecMode mode, std::uint64_t epochs);

}  // namespace okv
