#include "okv/storage/malicious.hpp"

#include <fstream>
#include <shared_mutex>
#include <sstream>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

void flip(Bytes& b, std::uint64_t bit) {
  if (b.empty()) return;
  bit %= b.size() * 8;
  b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
}

}  // namespace

std::vector<Attack> parse_attack_script(const std::string& text) {
  std::vector<Attack> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    Attack a;
    if (word == "tamper-slot") {
      a.kind = Attack::Kind::kTamperSlot;
    } else if (word == "replay-slot") {
      a.kind = Attack::Kind::kReplaySlot;
    } else if (word == "tamper-log") {
      a.kind = Attack::Kind::kTamperLog;
    } else if (word == "withhold-log") {
      a.kind = Attack::Kind::kWithholdLog;
    } else if (word == "replay-log") {
      a.kind = Attack::Kind::kReplayLog;
    } else {
      throw ConfigError("unknown attack '" + word + "'");
    }
    if (!(ls >> a.index)) throw ConfigError("attack '" + word + "' needs an index");
    ls >> a.bit;
    out.push_back(a);
  }
  return out;
}

std::vector<Attack> load_attack_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read attack script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_attack_script(ss.str());
}

MaliciousServer::MaliciousServer(StorageServer& inner, std::vector<Attack> script)
    : inner_(inner), pending_(std::move(script)) {}

std::size_t MaliciousServer::fired() const {
  std::lock_guard lock(mu_);
  return fired_;
}

Response MaliciousServer::handle(const Request& req) {
  Response resp = inner_.handle(req);
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < req.ops.size(); ++i) corrupt(req.ops[i], resp.results[i]);
  return resp;
}

void MaliciousServer::corrupt(const Op& op, OpResult& res) {
  const bool slot = std::holds_alternative<ReadSlotReq>(op);
  const bool log = std::holds_alternative<LogReadReq>(op);
  if (!slot && !log) return;
  const std::uint64_t seen = slot ? slot_reads_++ : log_reads_++;

  for (auto it = pending_.begin(); it != pending_.end(); ++it) {
    if (seen < it->index) continue;
    bool done = false;
    switch (it->kind) {
      case Attack::Kind::kTamperSlot:
        if (slot && res.status == Status::kOk) {
          flip(res.items.at(0), it->bit);
          done = true;
        }
        break;
      case Attack::Kind::kReplaySlot:
        if (slot && res.status == Status::kOk) {
          const auto& rs = std::get<ReadSlotReq>(op);
          std::shared_lock lock(inner_.mutex());
          if (auto prev = inner_.buckets().previous_version(rs.bucket)) {
            res.items.at(0) = *inner_.buckets().read_slot_at(rs.bucket, rs.slot, *prev);
            done = true;
          }
        }
        break;
      case Attack::Kind::kTamperLog:
        if (log && res.status == Status::kOk) {
          flip(res.items.at(0), it->bit);
          done = true;
        }
        break;
      case Attack::Kind::kWithholdLog:
        if (log && res.status == Status::kOk) {
          res = OpResult{Status::kNotFound, 0, {to_bytes("no such log record")}};
          done = true;
        }
        break;
      case Attack::Kind::kReplayLog:
        if (log && res.status == Status::kOk) {
          std::shared_lock lock(inner_.mutex());
          if (auto other = inner_.log().other_than(std::get<LogReadReq>(op).key)) {
            res.items.at(0) = *other;
            done = true;
          }
        }
        break;
    }
    if (done) {
      pending_.erase(it);
      ++fired_;
      return;
    }
  }
}

}  // namespace okv
