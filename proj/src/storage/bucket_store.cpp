#include "okv/storage/bucket_store.hpp"

#include <fstream>
#include <string>

#include "okv/common/errors.hpp"

namespace okv {
namespace fs = std::filesystem;

namespace {

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const fs::path& p, ByteSpan data) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace

VersionedBucketStore::VersionedBucketStore(std::optional<fs::path> dir) : dir_(std::move(dir)) {
  if (dir_) {
    fs::create_directories(*dir_);
    load();
  }
}

const VersionedBucketStore::Stored& VersionedBucketStore::get(BucketId b) const {
  auto it = buckets_.find(b);
  if (it == buckets_.end() || !it->second.current) {
    throw ProtocolError("bucket " + std::to_string(b) + " does not exist");
  }
  return it->second;
}

VersionedBucketStore::SlotRead VersionedBucketStore::read_slot(BucketId b, SlotIndex s) const {
  const auto& st = get(b);
  const auto& slots = st.versions.at(*st.current);
  if (s >= slots.size()) throw ProtocolError("slot index out of range");
  return {*st.current, slots[s]};
}

std::optional<Bytes> VersionedBucketStore::read_slot_at(BucketId b, SlotIndex s,
                                                        std::uint64_t version) const {
  auto it = buckets_.find(b);
  if (it == buckets_.end()) return std::nullopt;
  auto v = it->second.versions.find(version);
  if (v == it->second.versions.end() || s >= v->second.size()) return std::nullopt;
  return v->second[s];
}

std::pair<std::uint64_t, std::vector<Bytes>> VersionedBucketStore::read_bucket(BucketId b) const {
  const auto& st = get(b);
  return {*st.current, st.versions.at(*st.current)};
}

std::optional<std::uint64_t> VersionedBucketStore::previous_version(BucketId b) const {
  auto it = buckets_.find(b);
  if (it == buckets_.end() || !it->second.current) return std::nullopt;
  auto cur = it->second.versions.find(*it->second.current);
  if (cur == it->second.versions.begin()) return std::nullopt;
  return std::prev(cur)->first;
}

std::optional<std::uint64_t> VersionedBucketStore::current_version(BucketId b) const {
  auto it = buckets_.find(b);
  if (it == buckets_.end()) return std::nullopt;
  return it->second.current;
}

void VersionedBucketStore::write(BucketId b, std::uint64_t version, std::vector<Bytes> slots) {
  auto& st = buckets_[b];
  if (st.current && version <= *st.current) {
    throw ProtocolError("bucket " + std::to_string(b) + " write at version " +
                        std::to_string(version) + " not above current " +
                        std::to_string(*st.current));
  }
  if (dir_) persist(b, version, slots);
  st.versions[version] = std::move(slots);
  st.current = version;
}

void VersionedBucketStore::rollback(const VersionTarget& target) {
  for (const auto& [b, st] : buckets_) {
    const auto t = target.version_of(b);
    if (!st.current || *st.current < t || !st.versions.contains(t)) {
      throw ProtocolError("rollback target for bucket " + std::to_string(b) +
                          " is beyond the retained horizon");
    }
  }
  for (auto& [b, st] : buckets_) {
    const auto t = target.version_of(b);
    for (auto it = st.versions.upper_bound(t); it != st.versions.end();) {
      if (dir_) unpersist(b, it->first);
      it = st.versions.erase(it);
    }
    st.current = t;
  }
}

void VersionedBucketStore::gc(const VersionTarget& keep_from) {
  for (auto& [b, st] : buckets_) {
    if (!st.current) continue;
    const auto t = std::min(keep_from.version_of(b), *st.current);
    for (auto it = st.versions.begin(); it != st.versions.end() && it->first < t;) {
      if (dir_) unpersist(b, it->first);
      it = st.versions.erase(it);
    }
  }
}

std::size_t VersionedBucketStore::retained_versions() const {
  std::size_t n = 0;
  for (const auto& [b, st] : buckets_) n += st.versions.size();
  return n;
}

std::map<BucketId, std::vector<Bytes>> VersionedBucketStore::snapshot() const {
  std::map<BucketId, std::vector<Bytes>> out;
  for (const auto& [b, st] : buckets_) {
    if (st.current) out[b] = st.versions.at(*st.current);
  }
  return out;
}

fs::path VersionedBucketStore::file_for(BucketId b, std::uint64_t v) const {
  return *dir_ / ("b" + std::to_string(b) + "_v" + std::to_string(v));
}

void VersionedBucketStore::persist(BucketId b, std::uint64_t v,
                                   const std::vector<Bytes>& slots) const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(slots.size()));
  for (const auto& s : slots) w.blob(s);
  write_file_atomic(file_for(b, v), w.view());
}

void VersionedBucketStore::unpersist(BucketId b, std::uint64_t v) const {
  fs::remove(file_for(b, v));
}

void VersionedBucketStore::load() {
  for (const auto& entry : fs::directory_iterator(*dir_)) {
    const auto name = entry.path().filename().string();
    const auto sep = name.find("_v");
    if (name.empty() || name[0] != 'b' || sep == std::string::npos ||
        name.ends_with(".tmp")) {
      continue;
    }
    const auto b = static_cast<BucketId>(std::stoul(name.substr(1, sep - 1)));
    const auto v = std::stoull(name.substr(sep + 2));
    Bytes data = read_file(entry.path());
    ByteReader r(data);
    std::vector<Bytes> slots(r.u32());
    for (auto& s : slots) s = r.blob();
    auto& st = buckets_[b];
    st.versions[v] = std::move(slots);
    if (!st.current || v > *st.current) st.current = v;
  }
}

RecoveryUnit::RecoveryUnit(std::optional<fs::path> file) : file_(std::move(file)) {
  if (!file_ || !fs::exists(*file_)) return;
  Bytes data = read_file(*file_);
  ByteReader r(data);
  while (!r.done()) {
    LogKey k;
    k.type = r.u8();
    k.counter = r.u64();
    k.sub = r.u32();
    records_[k] = r.blob();
  }
}

void RecoveryUnit::append(const LogKey& key, Bytes record) {
  auto it = records_.find(key);
  if (it != records_.end()) {
    if (it->second != record) throw ProtocolError("log key already holds a different record");
    return;
  }
  if (file_) {
    ByteWriter w;
    w.u8(key.type);
    w.u64(key.counter);
    w.u32(key.sub);
    w.blob(record);
    std::ofstream out(*file_, std::ios::binary | std::ios::app);
    out.write(reinterpret_cast<const char*>(w.view().data()),
              static_cast<std::streamsize>(w.size()));
    out.flush();
    if (!out) throw std::runtime_error("log append failed");
  }
  records_.emplace(key, std::move(record));
}

std::optional<Bytes> RecoveryUnit::read(const LogKey& key) const {
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void RecoveryUnit::gc(std::uint64_t horizon) {
  std::erase_if(records_, [horizon](const auto& kv) { return kv.first.counter < horizon; });
  if (file_) rewrite_file();
}

std::optional<LogKey> RecoveryUnit::newest(std::uint8_t type) const {
  std::optional<LogKey> out;
  for (const auto& [k, v] : records_) {
    if (k.type == type) out = k;
  }
  return out;
}

std::optional<Bytes> RecoveryUnit::other_than(const LogKey& key) const {
  std::optional<Bytes> out;
  for (const auto& [k, v] : records_) {
    if (k.type != key.type || k == key) continue;
    if (k < key || !out) out = v;
  }
  return out;
}

void RecoveryUnit::rewrite_file() const {
  ByteWriter w;
  for (const auto& [k, v] : records_) {
    w.u8(k.type);
    w.u64(k.counter);
    w.u32(k.sub);
    w.blob(v);
  }
  write_file_atomic(*file_, w.view());
}

}  // namespace okv
