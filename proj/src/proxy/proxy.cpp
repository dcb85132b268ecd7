#include "okv/proxy/proxy.hpp"

#include <algorithm>
#include <string>

#include "okv/common/errors.hpp"

namespace okv {

void ProxyConfig::validate() const {
  geometry.validate();
  epoch.validate();
  if (block_size <= Sealer::kOverhead + 8) throw ConfigError("block size too small");
  if (full_checkpoint_every == 0) throw ConfigError("full checkpoint cadence must be positive");
  if (stash_bound == 0) throw ConfigError("stash bound must be positive");
  if (max_epoch_txns == 0) throw ConfigError("max_epoch_txns must be positive");
}

CheckpointLimits ProxyConfig::limits() const {
  CheckpointLimits lim;
  lim.geometry = geometry;
  lim.delta_positions = epoch.read_batches * epoch.read_batch_size + epoch.write_batch_size;
  lim.stash_bound = stash_bound;
  lim.max_epoch_txns = max_epoch_txns;
  lim.value_capacity = value_capacity();
  return lim;
}

Proxy::Proxy(ProxyConfig cfg, const KeyMaterial& keys, Transport& transport,
             TrustedCounter& counter)
    : cfg_((cfg.validate(), cfg)),
      keys_(keys),
      sealer_(keys, cfg.block_size, cfg.integrity),
      client_(transport),
      counter_(counter),
      batches_(cfg.epoch) {
  if (cfg_.mode == ExecMode::kParallel) {
    exec_ = std::make_unique<ParallelExecutor>(client_, sealer_, cfg_.parallel);
  } else {
    exec_ = std::make_unique<SequentialExecutor>(client_, sealer_);
  }
}

Proxy::~Proxy() = default;

template <class F>
auto Proxy::guarded(F&& f) {
  std::lock_guard lock(mu_);
  if (dead_) throw std::logic_error("proxy has crashed; recover with a new instance");
  try {
    return f();
  } catch (const CrashInjected&) {
    dead_ = true;
    throw;
  } catch (const IntegrityError&) {
    dead_ = true;
    throw;
  } catch (const ProtocolError&) {
    dead_ = true;
    throw;
  }
}

void Proxy::fire(Hook h, std::uint32_t occurrence) {
  if (hook_) hook_(CrashPoint{epoch_, h, occurrence});
}

void Proxy::set_clock_now(std::uint32_t tick) {
  if (clock_) clock_(epoch_, tick);
}

Iv Proxy::record_iv(const LogKey& key) const {
  // Deterministic so that a recovery interrupted after a durable append
  // reproduces exactly the same record when it runs again.
  const std::string label =
      "record-iv/" + std::to_string(key.type) + "/" + std::to_string(key.sub);
  return CryptoRng::derive(keys_.rng_seed, label, key.counter).iv();
}

VersionTarget Proxy::target_of(const std::vector<BucketMeta>& buckets,
                               std::uint64_t access_count) const {
  VersionTarget t;
  t.evict_paths = access_count / cfg_.geometry.evict_rate;
  for (BucketId b = 0; b < buckets.size(); ++b) {
    const auto base = evictions_touching(b, t.evict_paths);
    if (buckets[b].version < base) throw IntegrityError("checkpoint bucket version regressed");
    if (buckets[b].version > base) t.reshuffles.emplace_back(b, buckets[b].version - base);
  }
  return t;
}

void Proxy::open() {
  guarded([this] {
    if (open_) throw std::logic_error("proxy already open");
    const auto c = counter_.load();
    if (!c.initialized) {
      bootstrap();
    } else {
      recover();
    }
    open_ = true;
  });
}

void Proxy::bootstrap() {
  epoch_ = 0;
  set_clock_now(0);
  engine_.emplace(cfg_.geometry, cfg_.value_capacity(),
                  CryptoRng::derive(keys_.rng_seed, "genesis", 0));
  engine_->set_stamp({0, WriteStamp::kNormal});
  run_round([](RingOram& eng, BucketIo& io) { eng.initialize(io); }, {});
  exec_->flush();
  write_checkpoint(WriteStamp::kNormal, {});
  counter_.store({true, 1, 0, WriteStamp::kNormal});
  start_epoch(1);
}

void Proxy::start_epoch(std::uint64_t e) {
  epoch_ = e;
  tick_ = 0;
  engine_->set_stamp({e, WriteStamp::kNormal});
  engine_->reseed(CryptoRng::derive(keys_.rng_seed, "epoch", e));
  mvtso_.clear();
  new_keys_.clear();
}

Round Proxy::run_round(const RoundBody& body,
                       const std::function<void(const Round&)>& before_execute) {
  Round round = exec_->plan(*engine_, body);
  if (before_execute) before_execute(round);
  exec_->execute(*engine_, body, round);
  stats_.stash_high_water = std::max(stats_.stash_high_water, engine_->stats().stash_high_water);
  return round;
}

std::optional<TxnId> Proxy::begin() {
  return guarded([this]() -> std::optional<TxnId> {
    if (!open_) throw std::logic_error("proxy not open");
    if (mvtso_.size() >= cfg_.max_epoch_txns) return std::nullopt;
    return mvtso_.begin(epoch_);
  });
}

ReadReply Proxy::read(TxnId t, Key k) {
  return guarded([&]() -> ReadReply {
    if (outcomes_.contains(t) || mvtso_.status(t) != TxnStatus::kActive) {
      return {ReadStatus::kAborted, {}, 0};
    }
    auto r = mvtso_.read(t, k);
    if (!r.needs_base) return {ReadStatus::kValue, std::move(r.value), r.writer};
    if (!batches_.schedule(k)) {
      mvtso_.abort(t);
      return {ReadStatus::kAborted, {}, 0};
    }
    return {ReadStatus::kPending, {}, 0};
  });
}

bool Proxy::write(TxnId t, Key k, Bytes value) {
  return guarded([&] {
    if (value.size() > cfg_.value_capacity()) {
      throw ConfigError("value of " + std::to_string(value.size()) + " bytes exceeds capacity " +
                        std::to_string(cfg_.value_capacity()));
    }
    if (outcomes_.contains(t) || mvtso_.status(t) != TxnStatus::kActive) return false;
    if (!engine_->contains(k) && !new_keys_.contains(k)) {
      if (engine_->state().position.size() + new_keys_.size() >= cfg_.geometry.capacity) {
        mvtso_.abort(t);
        return false;
      }
      new_keys_.insert(k);
    }
    return mvtso_.write(t, k, std::move(value));
  });
}

void Proxy::commit(TxnId t) {
  guarded([&] {
    if (!outcomes_.contains(t)) mvtso_.complete(t);
  });
}

void Proxy::abort(TxnId t) {
  guarded([&] {
    if (!outcomes_.contains(t)) mvtso_.abort(t);
  });
}

void Proxy::tick() {
  guarded([this] {
    if (!open_) throw std::logic_error("proxy not open");
    set_clock_now(tick_);
    if (tick_ < cfg_.epoch.read_batches) {
      read_tick();
      ++tick_;
    } else {
      end_epoch();
    }
  });
}

void Proxy::read_tick() {
  const std::uint32_t j = batches_.next_batch();
  ReadBatch batch = batches_.fire([this](Key k) { return mvtso_.has_base(k); });
  std::vector<std::optional<Bytes>> results(batch.slots.size());
  std::vector<bool> present(batch.slots.size(), false);
  RoundBody body = [&](RingOram& eng, BucketIo& io) {
    for (std::size_t i = 0; i < batch.slots.size(); ++i) {
      const auto& k = batch.slots[i];
      if (k && eng.contains(*k)) {
        present[i] = true;
        results[i] = eng.access(io, *k, RingOram::AccessKind::kRead);
      } else {
        // Absent keys cost a dummy path read, same as padding.
        present[i] = false;
        eng.dummy_access(io);
      }
    }
  };
  run_round(body, [&](const Round& round) {
    fire(Hook::kBeforePathLog, j);
    PathLog log{epoch_, j, round.accesses};
    const auto key = path_log_key(epoch_, j);
    client_.log_append(key, seal_path_log(sealer_, log, cfg_.geometry,
                                          cfg_.epoch.read_batch_size, record_iv(key)));
    fire(Hook::kBeforeBatchCounter, j);
    counter_.store({true, epoch_, j + 1, static_cast<std::uint8_t>(last_ckpt_.second)});
    fire(Hook::kBeforeBatchRead, j);
  });
  for (std::size_t i = 0; i < batch.slots.size(); ++i) {
    if (!batch.slots[i]) continue;
    ++stats_.real_reads;
    mvtso_.install_base(*batch.slots[i], present[i] ? results[i] : std::nullopt);
  }
}

void Proxy::end_epoch() {
  auto fates = mvtso_.resolve_epoch(cfg_.epoch.write_batch_size);
  const auto writes = mvtso_.committed_writes();
  const std::uint32_t pad = cfg_.epoch.write_batch_size - static_cast<std::uint32_t>(writes.size());
  RoundBody body = [&](RingOram& eng, BucketIo& io) {
    for (const auto& [k, v] : writes) eng.dummiless_write(io, k, v);
    for (std::uint32_t i = 0; i < pad; ++i) eng.dummy_write(io);
  };
  run_round(body, [&](const Round&) { fire(Hook::kBeforeWritePhaseReads); });
  fire(Hook::kBeforeBucketFlush);
  exec_->flush([this] { fire(Hook::kMidBucketFlush); });

  std::vector<bool> committed;
  for (const auto& [t, ok] : fates) {
    const auto seq = static_cast<std::uint32_t>(t & 0xFFFFFFFFu);
    if (committed.size() < seq) committed.resize(seq, false);
    committed[seq - 1] = ok;
  }
  fire(Hook::kBeforeCheckpoint);
  write_checkpoint(WriteStamp::kNormal, committed);
  fire(Hook::kBeforeEpochCounter);
  counter_.store({true, epoch_ + 1, 0, WriteStamp::kNormal});
  fire(Hook::kBeforeCommitNotify);

  last_outcomes_ = fates;
  last_write_batch_ = writes;
  for (const auto& [t, ok] : fates) {
    outcomes_[t] = ok;
    ++(ok ? stats_.committed : stats_.aborted);
  }
  stats_.dirty_writes += writes.size();
  ++stats_.epochs;
  collect_garbage();
  batches_.end_epoch();
  start_epoch(epoch_ + 1);
}

void Proxy::write_checkpoint(std::uint8_t phase, const std::vector<bool>& committed) {
  auto& st = engine_->mutable_state();
  Checkpoint c;
  c.epoch = epoch_;
  c.phase = phase;
  c.full = phase == WriteStamp::kRecovery || epoch_ % cfg_.full_checkpoint_every == 0;
  if (epoch_ > 0 || phase == WriteStamp::kRecovery) c.prev = last_ckpt_;
  c.access_count = st.access_count;
  c.op_count = st.op_count;
  c.buckets = st.buckets;
  if (c.full) {
    c.positions = st.position;
  } else {
    for (Key k : st.dirty_positions) c.positions[k] = st.position.at(k);
  }
  c.stash = st.stash;
  c.committed = committed;
  const auto key = checkpoint_key(epoch_, phase);
  client_.log_append(key, seal_checkpoint(sealer_, c, cfg_.limits(), record_iv(key)));
  st.dirty_positions.clear();
  st.dirty_buckets.clear();
  last_ckpt_ = {epoch_, phase};
  if (c.full) full_epochs_.push_back(epoch_);
}

void Proxy::collect_garbage() {
  // Keep the bucket versions of the state just made durable (the rollback
  // target of the next epoch) and two full-checkpoint windows of records.
  const auto& st = engine_->state();
  std::uint64_t horizon = full_epochs_.empty() ? 0 : full_epochs_.back();
  if (full_epochs_.size() >= 2) horizon = full_epochs_[full_epochs_.size() - 2];
  client_.gc(target_of(st.buckets, st.access_count), horizon);
}

Checkpoint Proxy::load_chain(std::uint64_t epoch, std::uint8_t phase) {
  const auto lim = cfg_.limits();
  std::vector<Checkpoint> chain;
  std::pair<std::uint64_t, std::uint8_t> at{epoch, phase};
  while (true) {
    const auto key = checkpoint_key(at.first, at.second);
    auto rec = client_.log_read(key);
    if (!rec) {
      throw IntegrityError("checkpoint " + std::to_string(at.first) + "/" +
                           std::to_string(at.second) + " is missing from the recovery unit");
    }
    chain.push_back(open_checkpoint(sealer_, *rec, key, lim));
    if (chain.back().full) break;
    if (!chain.back().prev || chain.back().prev->first >= at.first) {
      throw IntegrityError("checkpoint chain is broken");
    }
    at = *chain.back().prev;
  }
  std::map<Key, Leaf> positions = chain.back().positions;
  for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) {
    for (const auto& [k, leaf] : it->positions) positions[k] = leaf;
  }
  Checkpoint out = std::move(chain.front());
  out.positions = std::move(positions);
  full_epochs_.clear();
  full_epochs_.push_back(chain.back().epoch);
  return out;
}

void Proxy::recover() {
  const auto c = counter_.load();
  epoch_ = c.epoch;
  tick_ = cfg_.epoch.ticks_per_epoch();
  set_clock_now(tick_);
  if (epoch_ == 0) throw IntegrityError("trusted counter names no committed epoch");

  Checkpoint ck = load_chain(epoch_ - 1, c.ckpt_phase);
  last_ckpt_ = {ck.epoch, ck.phase};
  fire(Hook::kBeforeRollback);
  client_.rollback(target_of(ck.buckets, ck.access_count));

  OramState st;
  st.geometry = cfg_.geometry;
  st.position = std::move(ck.positions);
  st.buckets = std::move(ck.buckets);
  st.stash = std::move(ck.stash);
  st.access_count = ck.access_count;
  st.op_count = ck.op_count;
  st.stamp = {epoch_, WriteStamp::kRecovery};
  engine_.emplace(std::move(st), cfg_.value_capacity(),
                  CryptoRng::derive(keys_.rng_seed, "recover", epoch_));
  exec_->reset();

  RecoveryReport report;
  report.epoch = epoch_;
  report.batches = c.batch;
  for (std::uint32_t j = 0; j < c.batch; ++j) {
    const auto key = path_log_key(epoch_, j);
    auto rec = client_.log_read(key);
    if (!rec) {
      throw IntegrityError("path log of batch " + std::to_string(j) + " was withheld");
    }
    auto log = open_path_log(sealer_, *rec, epoch_, j, cfg_.geometry, cfg_.epoch.read_batch_size);
    report.logged.insert(report.logged.end(), log.accesses.begin(), log.accesses.end());
    RoundBody body = [&log](RingOram& eng, BucketIo& io) {
      for (const auto& a : log.accesses) eng.replay_access(io, a);
    };
    auto round = run_round(body, [&](const Round&) { fire(Hook::kBeforeReplayRead, j); });
    report.replayed.insert(report.replayed.end(), round.accesses.begin(), round.accesses.end());
  }
  fire(Hook::kBeforeRecoveryFlush);
  exec_->flush();
  fire(Hook::kBeforeRecoveryCheckpoint);
  write_checkpoint(WriteStamp::kRecovery, {});
  fire(Hook::kBeforeRecoveryCounter);
  counter_.store({true, epoch_ + 1, 0, WriteStamp::kRecovery});
  ++stats_.recoveries;
  last_recovery_ = std::move(report);
  collect_garbage();
  batches_ = BatchManager(cfg_.epoch);
  start_epoch(epoch_ + 1);
}

CommitStatus Proxy::commit_status(TxnId t) {
  return guarded([&] {
    if (auto it = outcomes_.find(t); it != outcomes_.end()) {
      return it->second ? CommitStatus::kCommitted : CommitStatus::kAborted;
    }
    const auto e = epoch_of(t);
    if (e == epoch_) {
      return mvtso_.transaction(t) ? CommitStatus::kPending : CommitStatus::kUnknown;
    }
    if (e > epoch_ || e == 0) return CommitStatus::kUnknown;
    // A transaction of an earlier epoch whose fate this instance never saw,
    // e.g. because a crash came between the checkpoint and the notification.
    const auto lim = cfg_.limits();
    if (client_.log_read(checkpoint_key(e, WriteStamp::kRecovery))) return CommitStatus::kAborted;
    const auto key = checkpoint_key(e, WriteStamp::kNormal);
    auto rec = client_.log_read(key);
    if (!rec) return CommitStatus::kUnknown;
    const auto ck = open_checkpoint(sealer_, *rec, key, lim);
    const auto seq = t & 0xFFFFFFFFu;
    return seq >= 1 && seq <= ck.committed.size() && ck.committed[seq - 1]
               ? CommitStatus::kCommitted
               : CommitStatus::kAborted;
  });
}

}  // namespace okv
