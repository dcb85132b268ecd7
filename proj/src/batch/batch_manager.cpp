#include "okv/batch/batch_manager.hpp"

#include <algorithm>

#include "okv/common/errors.hpp"

namespace okv {

void EpochConfig::validate() const {
  if (read_batches == 0) throw ConfigError("R must be positive");
  if (read_batch_size == 0) throw ConfigError("b_read must be positive");
  if (write_batch_size == 0) throw ConfigError("b_write must be positive");
  if (delta == 0) throw ConfigError("delta must be positive");
}

std::size_t ReadBatch::real_count() const {
  return static_cast<std::size_t>(
      std::count_if(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); }));
}

BatchManager::BatchManager(EpochConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  pending_.resize(cfg_.read_batches);
}

std::optional<std::uint32_t> BatchManager::schedule(Key key) {
  if (auto it = assigned_.find(key); it != assigned_.end() && it->second >= next_) {
    return it->second;
  }
  for (std::uint32_t j = next_; j < cfg_.read_batches; ++j) {
    if (pending_[j].size() < cfg_.read_batch_size) {
      pending_[j].push_back(key);
      assigned_[key] = j;
      return j;
    }
  }
  return std::nullopt;
}

void BatchManager::end_epoch() {
  if (!reads_done()) throw std::logic_error("epoch ended before its read batches");
  for (auto& p : pending_) p.clear();
  assigned_.clear();
  next_ = 0;
  clock_ += cfg_.delta;
}

}  // namespace okv
