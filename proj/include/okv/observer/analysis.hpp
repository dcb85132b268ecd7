#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "okv/observer/trace.hpp"

namespace okv {

struct ChiSquareResult {
  double statistic = 0;
  double dof = 0;
  double p_value = 1;
  std::uint64_t samples = 0;
  bool conclusive = false;
};

// Leaf of every logical path access (reads grouped by op annotation).
std::vector<Leaf> access_leaves(const Trace& trace);

/// Goodness of fit of access leaves against the uniform distribution over
/// 2^L leaves. Inconclusive below 50 samples per leaf.
ChiSquareResult leaf_uniformity_test(const Trace& trace, const TreeGeometry& g);
ChiSquareResult uniformity_test(const std::vector<std::uint64_t>& counts);

/// Two-sample homogeneity test on leaf histograms.
ChiSquareResult two_sample_test(const std::vector<std::uint64_t>& a,
                                const std::vector<std::uint64_t>& b);
// Logical path accesses rebuilt from their reads: one per op annotation,
// slots in root-to-leaf order. Only meaningful for complete (sequential)
// traces.
std::vector<LoggedAccess> observed_accesses(const Trace& trace, const TreeGeometry& g);

std::vector<std::uint64_t> leaf_histogram(const Trace& trace, const TreeGeometry& g);

struct SlotReuse {
  std::uint64_t seq;
  BucketId bucket;
  SlotIndex slot;
};

/// Slots read twice without an intervening write of their bucket. A
/// rollback starts fresh windows: recovery replays are repeats by design.
std::vector<SlotReuse> slot_reuse_check(const Trace& trace);

/// Physical reads and final bucket versions of one epoch.
struct EpochAccessSet {
  std::map<std::pair<BucketId, SlotIndex>, std::uint64_t> reads;  // multiset
  std::map<BucketId, std::uint64_t> writes;
  bool duplicate_writes = false;
  friend bool operator==(const EpochAccessSet&, const EpochAccessSet&) = default;
};

// Per-epoch access sets of a trace taken as-is.
std::map<std::uint64_t, EpochAccessSet> observed_access_sets(const Trace& trace);
// Per-epoch access sets a parallel run must produce, derived from a
// sequential trace: reads of buckets already rewritten in the epoch are
// dropped, and the first evict or reshuffle read of a bucket fetched from
// storage expands to every slot unread since that bucket's last write.
std::map<std::uint64_t, EpochAccessSet> expand_sequential(const Trace& trace,
                                                          const TreeGeometry& g);

struct Verdict {
  bool ok = true;
  std::string detail;
};

Verdict trace_equivalence(const Trace& parallel, const Trace& sequential, const TreeGeometry& g);

/// Workload-independent shape of a trace: per tick, the ordered non-slot
/// messages with their lengths, the number of logical accesses and evict
/// paths, and the set of envelope lengths. Slot-read counts are excluded
/// because early reshuffles make them random. With include_counts false the
/// access and evict counts are dropped too (needed for parallel traces,
/// where fully buffered paths cause no reads).
std::string structural_projection(const Trace& trace, bool include_counts = true);

struct IndependenceResult {
  bool projection_equal = false;
  ChiSquareResult leaves;
  bool ok = false;
  std::string detail;
};

IndependenceResult workload_independence_test(const Trace& a, const Trace& b,
                                              const TreeGeometry& g, double alpha = 0.01,
                                              bool include_counts = true);

}  // namespace okv
