#include "okv/workload/workload.hpp"

#include <algorithm>
#include <cmath>

#include "okv/common/errors.hpp"

namespace okv {

std::string to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::kUniform: return "uniform";
    case WorkloadKind::kZipfian: return "zipfian";
    case WorkloadKind::kSmallBank: return "smallbank";
  }
  return "?";
}

WorkloadKind parse_workload_kind(const std::string& s) {
  if (s == "uniform") return WorkloadKind::kUniform;
  if (s == "zipfian" || s == "zipf") return WorkloadKind::kZipfian;
  if (s == "smallbank") return WorkloadKind::kSmallBank;
  throw ConfigError("unknown workload kind " + s);
}

void WorkloadSpec::validate() const {
  if (key_space == 0) throw ConfigError("key_space must be positive");
  if (read_ratio < 0 || read_ratio > 1) throw ConfigError("read_ratio must be in [0, 1]");
  if (ops_per_txn == 0) throw ConfigError("ops_per_txn must be positive");
  if (sessions == 0) throw ConfigError("sessions must be positive");
  if (hot_keys > key_space) throw ConfigError("hot_keys exceeds key_space");
  if (hot_ratio < 0 || hot_ratio > 1) throw ConfigError("hot_ratio must be in [0, 1]");
  if (kind == WorkloadKind::kSmallBank && key_space < 4) {
    throw ConfigError("smallbank needs at least two accounts");
  }
}

WorkloadGenerator::WorkloadGenerator(WorkloadSpec spec) : spec_(spec), rng_(spec.seed) {
  spec_.validate();
  if (spec_.kind == WorkloadKind::kZipfian) {
    zipf_cdf_.resize(spec_.key_space);
    double sum = 0;
    for (std::uint64_t i = 0; i < spec_.key_space; ++i) {
      sum += 1.0 / std::pow(static_cast<double>(i + 1), spec_.zipf_theta);
      zipf_cdf_[i] = sum;
    }
    for (auto& c : zipf_cdf_) c /= sum;
  }
}

Key WorkloadGenerator::pick_key() {
  std::uniform_real_distribution<double> unit(0, 1);
  if (spec_.hot_keys > 0 && unit(rng_) < spec_.hot_ratio) {
    return spec_.key_offset + rng_() % spec_.hot_keys;
  }
  if (spec_.kind == WorkloadKind::kZipfian) {
    const double u = unit(rng_);
    auto it = std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
    const auto rank = static_cast<Key>(std::min<std::ptrdiff_t>(
        it - zipf_cdf_.begin(), static_cast<std::ptrdiff_t>(spec_.key_space) - 1));
    return spec_.key_offset + rank;
  }
  return spec_.key_offset + rng_() % spec_.key_space;
}

std::string WorkloadGenerator::payload() {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string out(spec_.value_bytes, 'a');
  for (auto& c : out) c = kAlphabet[rng_() % (sizeof(kAlphabet) - 1)];
  return out;
}

TxnProgram WorkloadGenerator::smallbank() {
  // Account a owns checking key 2a and savings key 2a+1.
  const std::uint64_t accounts = spec_.key_space / 2;
  auto account = [&] { return (pick_key() - spec_.key_offset) % accounts; };
  auto checking = [&](std::uint64_t a) { return spec_.key_offset + 2 * a; };
  auto savings = [&](std::uint64_t a) { return spec_.key_offset + 2 * a + 1; };
  using K = TxnOp::Kind;
  TxnProgram p;
  const auto a = account();
  const auto amount = static_cast<std::int64_t>(rng_() % 100) + 1;
  switch (rng_() % 4) {
    case 0:
      p.label = "balance";
      p.ops = {{K::kRead, checking(a)}, {K::kRead, savings(a)}};
      break;
    case 1:
      p.label = "deposit";
      p.ops = {{K::kRead, checking(a)}, {K::kAdd, checking(a), "", amount}};
      break;
    case 2: {
      p.label = "transfer";
      auto b = account();
      if (b == a) b = (a + 1) % accounts;
      p.ops = {{K::kRead, checking(a)},
               {K::kRead, checking(b)},
               {K::kAdd, checking(a), "", -amount},
               {K::kAdd, checking(b), "", amount}};
      break;
    }
    default:
      p.label = "amalgamate";
      p.ops = {{K::kRead, checking(a)},
               {K::kRead, savings(a)},
               {K::kAdd, savings(a), "", -amount},
               {K::kAdd, checking(a), "", amount},
               {K::kRead, checking(a)}};
      break;
  }
  return p;
}

TxnProgram WorkloadGenerator::next() {
  if (spec_.kind == WorkloadKind::kSmallBank) return smallbank();
  TxnProgram p;
  std::uniform_real_distribution<double> unit(0, 1);
  p.ops.reserve(spec_.ops_per_txn);
  std::uint32_t reads = 0;
  for (std::uint32_t i = 0; i < spec_.ops_per_txn; ++i) {
    TxnOp op;
    op.key = pick_key();
    if (unit(rng_) < spec_.read_ratio) {
      op.kind = TxnOp::Kind::kRead;
      ++reads;
    } else {
      op.kind = TxnOp::Kind::kWrite;
      op.payload = payload();
    }
    p.ops.push_back(std::move(op));
  }
  p.label = reads == p.ops.size() ? "read-only" : "update";
  return p;
}

std::string encode_value(std::uint64_t writer, const std::string& payload) {
  return std::to_string(writer) + ":" + payload;
}

std::uint64_t value_writer(const std::string& value) {
  const auto i = value.find(':');
  if (i == std::string::npos) return 0;
  return std::stoull(value.substr(0, i));
}

std::string value_payload(const std::string& value) {
  const auto i = value.find(':');
  return i == std::string::npos ? value : value.substr(i + 1);
}

}  // namespace okv
