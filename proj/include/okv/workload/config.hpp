#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "okv/workload/deployment.hpp"
#include "okv/workload/workload.hpp"

namespace okv {

/// Everything the harness needs for one deployment plus its workload.
struct HarnessConfig {
  ProxyConfig proxy;
  WorkloadSpec workload;
  std::uint64_t key_seed = 1;
  std::chrono::microseconds latency{0};
  std::optional<std::filesystem::path> data_dir;
  std::optional<RemoteStorage> remote;

  DeploymentOptions deployment() const;
};

// Config files are "key = value" lines; '#' starts a comment and
// "[section]" headers are accepted and ignored. Keys:
//
//   tree        N Z S A L          (capacity, real/dummy slots, evict rate, levels)
//   epoch       R b_read b_write delta
//   proxy       block_size integrity mode workers batch_ops
//               full_checkpoint_every stash_bound max_epoch_txns key_seed
//   storage     data_dir storage (host:port) latency_ms
//   workload    workload key_space key_offset read_ratio ops_per_txn txns
//               sessions zipf_theta hot_keys hot_ratio value_bytes seed
void apply_setting(HarnessConfig& cfg, std::string_view key, std::string_view value);
HarnessConfig parse_config(std::string_view text, HarnessConfig base = {});
HarnessConfig load_config(const std::filesystem::path& path, HarnessConfig base = {});

// Every key with its current value, in the file format above.
std::string dump_config(const HarnessConfig& cfg);

}  // namespace okv
