#include "okv/txn/mvtso.hpp"

#include <algorithm>
#include <stdexcept>

namespace okv {

TxnId Mvtso::begin(std::uint64_t epoch) {
  std::lock_guard lock(mu_);
  if (epoch != epoch_) {
    if (epoch < epoch_) throw std::logic_error("epochs go forward");
    epoch_ = epoch;
    next_seq_ = 1;
  }
  const TxnId t = make_ts(epoch, next_seq_++);
  txns_[t].ts = t;
  return t;
}

Transaction& Mvtso::txn(TxnId t) {
  auto it = txns_.find(t);
  if (it == txns_.end()) throw std::logic_error("unknown transaction");
  return it->second;
}

MvRead Mvtso::read(TxnId t, Key k) {
  std::lock_guard lock(mu_);
  auto& tx = txn(t);
  if (tx.status != TxnStatus::kActive) throw std::logic_error("read by inactive transaction");
  auto& chain = chains_[k];
  Version* pick = nullptr;
  for (auto& v : chain) {
    if (v.writer <= t) pick = &v;
  }
  if (pick == nullptr) return {true, {}, 0};
  pick->read_marker = std::max(pick->read_marker, t);
  tx.read_set.insert(k);
  if (pick->writer != 0 && pick->writer != t) {
    tx.deps.insert(pick->writer);
    txn(pick->writer).dependents.insert(t);
  }
  return {false, pick->value, pick->writer};
}

bool Mvtso::write(TxnId t, Key k, Bytes value) {
  std::lock_guard lock(mu_);
  auto& tx = txn(t);
  if (tx.status != TxnStatus::kActive) throw std::logic_error("write by inactive transaction");
  auto& chain = chains_[k];
  auto pos = std::lower_bound(chain.begin(), chain.end(), t,
                              [](const Version& v, TxnId x) { return v.writer < x; });
  if (pos != chain.end() && pos->writer == t) {
    // Rewriting its own version is only safe if nobody else has read it.
    if (pos->read_marker > t) {
      abort_locked(t);
      return false;
    }
    pos->value = std::move(value);
    return true;
  }
  if (pos != chain.begin() && std::prev(pos)->read_marker > t) {
    abort_locked(t);
    return false;
  }
  chain.insert(pos, Version{t, std::move(value), 0});
  tx.write_set.insert(k);
  return true;
}

void Mvtso::complete(TxnId t) {
  std::lock_guard lock(mu_);
  auto& tx = txn(t);
  if (tx.status == TxnStatus::kActive) tx.status = TxnStatus::kCompleted;
}

void Mvtso::abort(TxnId t) {
  std::lock_guard lock(mu_);
  abort_locked(t);
}

void Mvtso::abort_locked(TxnId t) {
  std::vector<TxnId> work{t};
  while (!work.empty()) {
    const TxnId cur = work.back();
    work.pop_back();
    auto& tx = txn(cur);
    if (tx.status == TxnStatus::kAborted || tx.status == TxnStatus::kCommitted) continue;
    tx.status = TxnStatus::kAborted;
    for (Key k : tx.write_set) {
      std::erase_if(chains_[k], [cur](const Version& v) { return v.writer == cur; });
    }
    for (TxnId d : tx.dependents) work.push_back(d);
  }
}

bool Mvtso::has_base(Key k) const {
  std::lock_guard lock(mu_);
  auto it = chains_.find(k);
  return it != chains_.end() && has_base_locked(it->second);
}

void Mvtso::install_base(Key k, std::optional<Bytes> value) {
  std::lock_guard lock(mu_);
  auto& chain = chains_[k];
  if (has_base_locked(chain)) return;
  chain.insert(chain.begin(), Version{0, std::move(value), 0});
}

std::map<TxnId, bool> Mvtso::resolve_epoch(std::size_t max_dirty_keys) {
  std::lock_guard lock(mu_);
  for (auto& [t, tx] : txns_) {
    if (tx.status == TxnStatus::kActive) abort_locked(t);
  }
  // Cascades run eagerly, but close over deps again in case a dependency
  // was aborted before its reader registered.
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& [t, tx] : txns_) {
      if (tx.status != TxnStatus::kCompleted) continue;
      for (TxnId d : tx.deps) {
        auto it = txns_.find(d);
        if (it == txns_.end() || it->second.status == TxnStatus::kAborted) {
          abort_locked(t);
          changed = true;
          break;
        }
      }
    }
  }
  auto dirty_keys = [this] {
    std::size_t n = 0;
    for (const auto& [k, chain] : chains_) {
      if (std::any_of(chain.begin(), chain.end(), [](const Version& v) { return v.writer != 0; })) {
        ++n;
      }
    }
    return n;
  };
  while (dirty_keys() > max_dirty_keys) {
    auto victim = std::find_if(txns_.begin(), txns_.end(), [](const auto& kv) {
      return kv.second.status == TxnStatus::kCompleted && !kv.second.write_set.empty();
    });
    if (victim == txns_.end()) break;
    abort_locked(victim->first);
  }
  std::map<TxnId, bool> out;
  for (auto& [t, tx] : txns_) {
    if (tx.status == TxnStatus::kCompleted) tx.status = TxnStatus::kCommitted;
    out[t] = tx.status == TxnStatus::kCommitted;
  }
  return out;
}

std::map<Key, Bytes> Mvtso::committed_writes() const {
  std::lock_guard lock(mu_);
  std::map<Key, Bytes> out;
  for (const auto& [k, chain] : chains_) {
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      if (it->writer == 0) break;
      auto tx = txns_.find(it->writer);
      if (tx != txns_.end() && tx->second.status == TxnStatus::kCommitted && it->value) {
        out[k] = *it->value;
        break;
      }
    }
  }
  return out;
}

void Mvtso::clear() {
  std::lock_guard lock(mu_);
  txns_.clear();
  chains_.clear();
}

TxnStatus Mvtso::status(TxnId t) const {
  std::lock_guard lock(mu_);
  auto it = txns_.find(t);
  if (it == txns_.end()) throw std::logic_error("unknown transaction");
  return it->second.status;
}

std::optional<Transaction> Mvtso::transaction(TxnId t) const {
  std::lock_guard lock(mu_);
  auto it = txns_.find(t);
  if (it == txns_.end()) return std::nullopt;
  return it->second;
}

std::size_t Mvtso::size() const {
  std::lock_guard lock(mu_);
  return txns_.size();
}

}  // namespace okv
