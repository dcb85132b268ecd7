#include "okv/common/bytes.hpp"

#include "okv/common/errors.hpp"

namespace okv {

ByteSpan ByteReader::raw(std::size_t n) {
  if (n > remaining()) throw DecodeError("truncated input");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_done() const {
  if (!done()) throw DecodeError("trailing bytes after record");
}

std::uint64_t ByteReader::get_le(int n) {
  auto s = raw(static_cast<std::size_t>(n));
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
  return v;
}

}  // namespace okv
