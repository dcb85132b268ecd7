#include "okv/durability/crash.hpp"

#include <charconv>
#include <random>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

constexpr std::array<std::string_view, kHookCount> kNames = {
    "before-path-log",        "before-batch-counter",   "before-batch-read",
    "before-write-phase-reads", "before-bucket-flush",  "mid-bucket-flush",
    "before-checkpoint",      "before-epoch-counter",   "before-commit-notify",
    "before-rollback",        "before-replay-read",     "before-recovery-flush",
    "before-recovery-checkpoint", "before-recovery-counter",
};

std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("bad number in crash schedule: " + std::string(s));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    auto i = s.find(sep);
    out.push_back(s.substr(0, i));
    if (i == std::string_view::npos) break;
    s.remove_prefix(i + 1);
  }
  return out;
}

}  // namespace

std::string_view hook_name(Hook h) { return kNames.at(static_cast<std::size_t>(h)); }

std::optional<Hook> parse_hook(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<Hook>(i);
  }
  return std::nullopt;
}

bool is_recovery_hook(Hook h) { return h >= Hook::kBeforeRollback; }

bool is_per_batch_hook(Hook h) {
  return h == Hook::kBeforePathLog || h == Hook::kBeforeBatchCounter ||
         h == Hook::kBeforeBatchRead || h == Hook::kBeforeReplayRead;
}

std::string CrashPoint::str() const {
  return std::to_string(epoch) + ":" + std::string(hook_name(hook)) + ":" +
         std::to_string(occurrence);
}

CrashSchedule::CrashSchedule(std::vector<CrashPoint> points)
    : points_(points.begin(), points.end()) {}

CrashSchedule CrashSchedule::random(std::uint64_t seed, double p) {
  CrashSchedule s;
  s.seed_ = seed;
  s.probability_ = p;
  return s;
}

void CrashSchedule::visit(const CrashPoint& p) {
  if (fired_.contains(p)) return;
  bool crash = points_.contains(p);
  if (!crash && probability_ > 0) {
    // Hash the point with the seed so the decision does not depend on how
    // many hooks were visited before.
    std::seed_seq seq{seed_, p.epoch, static_cast<std::uint64_t>(p.hook),
                      std::uint64_t{p.occurrence}};
    std::mt19937_64 rng(seq);
    crash = std::uniform_real_distribution<double>(0, 1)(rng) < probability_;
  }
  if (!crash) return;
  fired_.insert(p);
  throw CrashInjected(p);
}

CrashSchedule CrashSchedule::parse(std::string_view text) {
  if (text.empty()) return {};
  if (text.starts_with("random:")) {
    auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("expected random:<seed>:<p>");
    return random(parse_u64(parts[1]), std::stod(std::string(parts[2])));
  }
  CrashSchedule out;
  for (auto item : split(text, ',')) {
    auto parts = split(item, ':');
    if (parts.size() < 2 || parts.size() > 3) {
      throw ConfigError("expected epoch:hook[:occurrence], got " + std::string(item));
    }
    auto hook = parse_hook(parts[1]);
    if (!hook) throw ConfigError("unknown hook " + std::string(parts[1]));
    CrashPoint p{parse_u64(parts[0]), *hook, 0};
    if (parts.size() == 3) p.occurrence = static_cast<std::uint32_t>(parse_u64(parts[2]));
    out.add(p);
  }
  return out;
}

}  // namespace okv
