#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "okv/storage/server.hpp"

namespace okv {

/// One scripted misbehaviour. `index` counts matching ops (slot reads or log
/// reads) from zero; the attack fires on the first match at or after it.
struct Attack {
  enum class Kind { kTamperSlot, kReplaySlot, kTamperLog, kWithholdLog, kReplayLog };
  Kind kind = Kind::kTamperSlot;
  std::uint64_t index = 0;
  std::uint64_t bit = 0;  // tamper only; taken modulo the payload size in bits
};

// Script format, one attack per line, '#' starts a comment:
//   tamper-slot <index> [bit]   replay-slot <index>
//   tamper-log <index> [bit]    withhold-log <index>    replay-log <index>
std::vector<Attack> parse_attack_script(const std::string& text);
std::vector<Attack> load_attack_script(const std::filesystem::path& path);

/// Response transformer over an honest server. Requests are always applied
/// honestly; only the replies are corrupted.
class MaliciousServer : public RequestHandler {
 public:
  MaliciousServer(StorageServer& inner, std::vector<Attack> script);

  Response handle(const Request& req) override;
  std::size_t fired() const;

 private:
  void corrupt(const Op& op, OpResult& res);

  StorageServer& inner_;
  mutable std::mutex mu_;
  std::vector<Attack> pending_;
  std::size_t fired_ = 0;
  std::uint64_t slot_reads_ = 0;
  std::uint64_t log_reads_ = 0;
};

}  // namespace okv
