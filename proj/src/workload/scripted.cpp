#include "okv/workload/scripted.hpp"

#include <stdexcept>

#include "okv/workload/workload.hpp"

namespace okv {
namespace {

const std::map<std::string, Key> kObjects = {{"a", 1}, {"b", 2}, {"c", 3},
                                             {"d", 4}, {"e", 5}, {"g", 7}};

std::string as_string(const std::optional<Bytes>& b) {
  return b ? std::string(b->begin(), b->end()) : "<absent>";
}

}  // namespace

ScriptedResult run_scripted_history(Deployment& d) {
  auto& p = d.has_proxy() ? d.proxy() : d.restart();
  auto finish_epoch = [&p] {
    const auto e = p.epoch();
    while (p.epoch() == e) p.tick();
  };
  auto put = [&p](TxnId t, const std::string& obj, const std::string& payload) {
    return p.write(t, kObjects.at(obj), to_bytes(encode_value(t, payload)));
  };
  auto get = [&p](TxnId t, const std::string& obj) { return p.read(t, kObjects.at(obj)); };
  auto value = [&](TxnId t, const std::string& obj) {
    auto r = get(t, obj);
    if (r.status != ReadStatus::kValue) throw std::logic_error("expected a local value for " + obj);
    return r;
  };

  // Initial versions a0, b0, ... committed in an earlier epoch.
  if (p.tick_index() != 0) finish_epoch();
  const TxnId t0 = *p.begin();
  for (const auto& [name, key] : kObjects) put(t0, name, name + "0");
  p.commit(t0);
  finish_epoch();

  ScriptedResult out;
  const TxnId t1 = *p.begin(), t2 = *p.begin(), t3 = *p.begin();
  // First read batch: a for t1, d for t2, g for t3.
  get(t1, "a");
  get(t2, "d");
  get(t3, "g");
  auto reals = p.stats().real_reads;
  p.tick();
  out.batch_real_reads.push_back(p.stats().real_reads - reals);

  value(t1, "a");
  put(t1, "a", "a1");
  value(t1, "a");
  value(t2, "d");
  value(t3, "g");
  out.d_served_from_cache = get(t3, "d").status == ReadStatus::kValue;
  const auto a_seen = get(t3, "a");
  put(t3, "c", "c2");
  out.t3_depends_on_t1 = a_seen.writer == t1 && p.transaction(t3)->deps.contains(t1);
  out.t2_aborted_on_write = !put(t2, "d", "d2");
  out.b_spilled_to_second_batch = get(t1, "b").status == ReadStatus::kPending;
  const TxnId t4 = *p.begin();
  put(t4, "e", "e4");

  reals = p.stats().real_reads;
  p.tick();
  out.batch_real_reads.push_back(p.stats().real_reads - reals);
  value(t1, "b");
  put(t1, "c", "c1");
  p.commit(t1);
  p.commit(t3);
  finish_epoch();

  const std::map<std::string, TxnId> names = {{"t1", t1}, {"t2", t2}, {"t3", t3}, {"t4", t4}};
  for (const auto& [name, t] : names) {
    out.committed[name] = p.commit_status(t) == CommitStatus::kCommitted;
  }
  for (const auto& [name, key] : kObjects) {
    auto it = p.last_write_batch().find(key);
    if (it != p.last_write_batch().end()) out.write_batch[name] = as_string(it->second);
  }
  return out;
}

}  // namespace okv
