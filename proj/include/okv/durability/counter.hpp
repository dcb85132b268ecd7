#pragma once

#include <cstdint>
#include <filesystem>

namespace okv {

/// c_e is the epoch in progress (every earlier epoch is committed or was
/// recovered), c_b the number of its read batches whose logs are durable.
/// `ckpt_phase` tells recovery which checkpoint of epoch c_e - 1 is current.
struct CounterState {
  bool initialized = false;
  std::uint64_t epoch = 0;
  std::uint32_t batch = 0;
  std::uint8_t ckpt_phase = 0;

  friend bool operator==(const CounterState&, const CounterState&) = default;
};

/// The small piece of non-volatile proxy state that survives crashes.
class TrustedCounter {
 public:
  virtual ~TrustedCounter() = default;
  virtual CounterState load() const = 0;
  virtual void store(const CounterState& s) = 0;
};

class MemoryCounter : public TrustedCounter {
 public:
  CounterState load() const override { return state_; }
  void store(const CounterState& s) override { state_ = s; }

 private:
  CounterState state_;
};

/// File-backed cell updated by write-to-temp plus rename.
class FileCounter : public TrustedCounter {
 public:
  explicit FileCounter(std::filesystem::path path) : path_(std::move(path)) {}
  CounterState load() const override;
  void store(const CounterState& s) override;

 private:
  std::filesystem::path path_;
};

}  // namespace okv
