#include "okv/durability/counter.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <iterator>
#include <stdexcept>

#include "okv/common/bytes.hpp"
#include "okv/common/errors.hpp"

namespace okv {

CounterState FileCounter::load() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return {};
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  CounterState s;
  try {
    s.initialized = true;
    s.epoch = r.u64();
    s.batch = r.u32();
    s.ckpt_phase = r.u8();
    r.expect_done();
  } catch (const DecodeError&) {
    throw IntegrityError("trusted counter file is corrupt");
  }
  return s;
}

void FileCounter::store(const CounterState& s) {
  ByteWriter w;
  w.u64(s.epoch);
  w.u32(s.batch);
  w.u8(s.ckpt_phase);
  const auto tmp = path_.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  if (fd < 0) throw std::runtime_error("cannot write trusted counter " + tmp);
  const auto& buf = w.view();
  const bool ok = ::write(fd, buf.data(), buf.size()) == static_cast<ssize_t>(buf.size()) &&
                  ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw std::runtime_error("cannot write trusted counter " + tmp);
  std::filesystem::rename(tmp, path_);
}

}  // namespace okv
