#include "okv/workload/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
  }
  return out;
}

double real(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(v), &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
}

bool boolean(std::string_view key, std::string_view v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
}

using Setter = std::function<void(HarnessConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto u32 = [](auto get) {
      return Setter([get](HarnessConfig& c, std::string_view k, std::string_view v) {
        get(c) = number<std::uint32_t>(k, v);
      });
    };
    auto u64 = [](auto get) {
      return Setter([get](HarnessConfig& c, std::string_view k, std::string_view v) {
        get(c) = number<std::uint64_t>(k, v);
      });
    };
    auto dbl = [](auto get) {
      return Setter([get](HarnessConfig& c, std::string_view k, std::string_view v) {
        get(c) = real(k, v);
      });
    };
    t["N"] = u64([](HarnessConfig& c) -> auto& { return c.proxy.geometry.capacity; });
    t["Z"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.geometry.real_slots; });
    t["S"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.geometry.dummy_slots; });
    t["A"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.geometry.evict_rate; });
    t["L"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.geometry.levels; });
    t["R"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.epoch.read_batches; });
    t["b_read"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.epoch.read_batch_size; });
    t["b_write"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.epoch.write_batch_size; });
    t["delta"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.epoch.delta; });
    t["block_size"] = [](HarnessConfig& c, std::string_view k, std::string_view v) {
      c.proxy.block_size = number<std::size_t>(k, v);
    };
    t["integrity"] = [](HarnessConfig& c, std::string_view k, std::string_view v) {
      c.proxy.integrity = boolean(k, v);
    };
    t["mode"] = [](HarnessConfig& c, std::string_view, std::string_view v) {
      if (v == "sequential") {
        c.proxy.mode = ExecMode::kSequential;
      } else if (v == "parallel") {
        c.proxy.mode = ExecMode::kParallel;
      } else {
        throw ConfigError("mode must be sequential or parallel, not '" + std::string(v) + "'");
      }
    };
    t["workers"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.parallel.workers; });
    t["batch_ops"] = [](HarnessConfig& c, std::string_view k, std::string_view v) {
      c.proxy.parallel.max_batch_ops = number<std::size_t>(k, v);
    };
    t["full_checkpoint_every"] =
        u32([](HarnessConfig& c) -> auto& { return c.proxy.full_checkpoint_every; });
    t["stash_bound"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.stash_bound; });
    t["max_epoch_txns"] = u32([](HarnessConfig& c) -> auto& { return c.proxy.max_epoch_txns; });
    t["key_seed"] = u64([](HarnessConfig& c) -> auto& { return c.key_seed; });
    t["data_dir"] = [](HarnessConfig& c, std::string_view, std::string_view v) {
      if (v.empty()) {
        c.data_dir.reset();
      } else {
        c.data_dir = std::filesystem::path(std::string(v));
      }
    };
    t["storage"] = [](HarnessConfig& c, std::string_view k, std::string_view v) {
      if (v.empty() || v == "local") {
        c.remote.reset();
        return;
      }
      const auto colon = v.rfind(':');
      if (colon == std::string_view::npos) throw ConfigError("storage must be host:port or local");
      c.remote = RemoteStorage{std::string(v.substr(0, colon)),
                               number<std::uint16_t>(k, v.substr(colon + 1))};
    };
    t["latency_ms"] = [](HarnessConfig& c, std::string_view k, std::string_view v) {
      c.latency = std::chrono::microseconds(static_cast<std::int64_t>(real(k, v) * 1000.0));
    };
    t["workload"] = [](HarnessConfig& c, std::string_view, std::string_view v) {
      c.workload.kind = parse_workload_kind(std::string(v));
    };
    t["key_space"] = u64([](HarnessConfig& c) -> auto& { return c.workload.key_space; });
    t["key_offset"] = u64([](HarnessConfig& c) -> auto& { return c.workload.key_offset; });
    t["read_ratio"] = dbl([](HarnessConfig& c) -> auto& { return c.workload.read_ratio; });
    t["ops_per_txn"] = u32([](HarnessConfig& c) -> auto& { return c.workload.ops_per_txn; });
    t["txns"] = u64([](HarnessConfig& c) -> auto& { return c.workload.txns; });
    t["sessions"] = u32([](HarnessConfig& c) -> auto& { return c.workload.sessions; });
    t["zipf_theta"] = dbl([](HarnessConfig& c) -> auto& { return c.workload.zipf_theta; });
    t["hot_keys"] = u32([](HarnessConfig& c) -> auto& { return c.workload.hot_keys; });
    t["hot_ratio"] = dbl([](HarnessConfig& c) -> auto& { return c.workload.hot_ratio; });
    t["value_bytes"] = u32([](HarnessConfig& c) -> auto& { return c.workload.value_bytes; });
    t["seed"] = u64([](HarnessConfig& c) -> auto& { return c.workload.seed; });
    return t;
  }();
  return table;
}

}  // namespace

DeploymentOptions HarnessConfig::deployment() const {
  DeploymentOptions o;
  o.proxy = proxy;
  o.keys = KeyMaterial::from_seed(key_seed);
  o.data_dir = data_dir;
  o.remote = remote;
  o.latency = latency;
  return o;
}

void apply_setting(HarnessConfig& cfg, std::string_view key, std::string_view value) {
  const auto& t = setters();
  auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, value);
}

HarnessConfig parse_config(std::string_view text, HarnessConfig cfg) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.proxy.validate();
  cfg.workload.validate();
  return cfg;
}

HarnessConfig load_config(const std::filesystem::path& path, HarnessConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const HarnessConfig& c) {
  std::ostringstream o;
  const auto& g = c.proxy.geometry;
  const auto& e = c.proxy.epoch;
  const auto& w = c.workload;
  o << "[tree]\nN = " << g.capacity << "\nZ = " << g.real_slots << "\nS = " << g.dummy_slots
    << "\nA = " << g.evict_rate << "\nL = " << g.levels << "\n\n[epoch]\nR = " << e.read_batches
    << "\nb_read = " << e.read_batch_size << "\nb_write = " << e.write_batch_size
    << "\ndelta = " << e.delta << "\n\n[proxy]\nblock_size = " << c.proxy.block_size
    << "\nintegrity = " << (c.proxy.integrity ? "true" : "false")
    << "\nmode = " << (c.proxy.mode == ExecMode::kSequential ? "sequential" : "parallel")
    << "\nworkers = " << c.proxy.parallel.workers
    << "\nbatch_ops = " << c.proxy.parallel.max_batch_ops
    << "\nfull_checkpoint_every = " << c.proxy.full_checkpoint_every
    << "\nstash_bound = " << c.proxy.stash_bound << "\nmax_epoch_txns = " << c.proxy.max_epoch_txns
    << "\nkey_seed = " << c.key_seed << "\n\n[storage]\ndata_dir = "
    << (c.data_dir ? c.data_dir->string() : "") << "\nstorage = "
    << (c.remote ? c.remote->host + ":" + std::to_string(c.remote->port) : "local")
    << "\nlatency_ms = " << static_cast<double>(c.latency.count()) / 1000.0
    << "\n\n[workload]\nworkload = " << to_string(w.kind) << "\nkey_space = " << w.key_space
    << "\nkey_offset = " << w.key_offset << "\nread_ratio = " << w.read_ratio
    << "\nops_per_txn = " << w.ops_per_txn << "\ntxns = " << w.txns
    << "\nsessions = " << w.sessions << "\nzipf_theta = " << w.zipf_theta
    << "\nhot_keys = " << w.hot_keys << "\nhot_ratio = " << w.hot_ratio
    << "\nvalue_bytes = " << w.value_bytes << "\nseed = " << w.seed << "\n";
  return o.str();
}

}  // namespace okv
