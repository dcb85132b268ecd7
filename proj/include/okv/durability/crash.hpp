#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace okv {

/// Points just before each persistent or externally visible step of an
/// epoch and of recovery. A crash hook may throw CrashInjected at any of them.
enum class Hook : std::uint8_t {
  kBeforePathLog = 0,
  kBeforeBatchCounter,
  kBeforeBatchRead,
  kBeforeWritePhaseReads,
  kBeforeBucketFlush,
  kMidBucketFlush,
  kBeforeCheckpoint,
  kBeforeEpochCounter,
  kBeforeCommitNotify,
  kBeforeRollback,
  kBeforeReplayRead,
  kBeforeRecoveryFlush,
  kBeforeRecoveryCheckpoint,
  kBeforeRecoveryCounter,
};

inline constexpr std::size_t kHookCount = 14;
std::string_view hook_name(Hook h);
std::optional<Hook> parse_hook(std::string_view name);
bool is_recovery_hook(Hook h);
// Hooks fired once per read batch (occurrence = batch index) rather than
// once per epoch.
bool is_per_batch_hook(Hook h);

struct CrashPoint {
  std::uint64_t epoch = 0;
  Hook hook = Hook::kBeforePathLog;
  std::uint32_t occurrence = 0;

  auto tie() const { return std::tie(epoch, hook, occurrence); }
  friend bool operator<(const CrashPoint& a, const CrashPoint& b) { return a.tie() < b.tie(); }
  friend bool operator==(const CrashPoint& a, const CrashPoint& b) { return a.tie() == b.tie(); }
  std::string str() const;
};

class CrashInjected : public std::runtime_error {
 public:
  explicit CrashInjected(CrashPoint p) : std::runtime_error("crash at " + p.str()), point(p) {}
  CrashPoint point;
};

using HookFn = std::function<void(const CrashPoint&)>;

/// Crash points to inject. Each point fires at most once, so a recovery
/// that passes the same point again proceeds.
class CrashSchedule {
 public:
  CrashSchedule() = default;
  explicit CrashSchedule(std::vector<CrashPoint> points);
  // Crashes with probability `p` at every hook, deterministically from `seed`.
  static CrashSchedule random(std::uint64_t seed, double p);

  void add(CrashPoint p) { points_.insert(p); }
  // Throws CrashInjected when `p` is scheduled and has not fired.
  void visit(const CrashPoint& p);
  HookFn hook() {
    return [this](const CrashPoint& p) { visit(p); };
  }
  std::size_t fired() const { return fired_.size(); }
  bool pending() const { return fired_.size() < points_.size() || probability_ > 0; }

  // "epoch:hook[:occurrence]" per entry, comma separated, or "random:<seed>:<p>".
  static CrashSchedule parse(std::string_view text);

 private:
  std::set<CrashPoint> points_;
  std::set<CrashPoint> fired_;
  double probability_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace okv
