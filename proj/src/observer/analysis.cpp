#include "okv/observer/analysis.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <set>
#include <sstream>

namespace okv {
namespace {

double chi2_sf(double stat, double dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

bool is_access_read(const TraceEvent& e) {
  return e.kind == EventKind::kRead && e.has_tag && e.purpose == ReadPurpose::kAccess;
}

}  // namespace

std::vector<Leaf> access_leaves(const Trace& trace) {
  std::vector<Leaf> out;
  std::set<std::uint64_t> seen;
  for (const auto& e : trace) {
    if (is_access_read(e) && seen.insert(e.op).second) out.push_back(e.leaf);
  }
  return out;
}

std::vector<LoggedAccess> observed_accesses(const Trace& trace, const TreeGeometry& g) {
  std::vector<LoggedAccess> out;
  std::map<std::uint64_t, std::size_t> index;
  for (const auto& e : trace) {
    if (!is_access_read(e)) continue;
    auto [it, fresh] = index.emplace(e.op, out.size());
    if (fresh) out.push_back({e.leaf, std::vector<SlotIndex>(g.path_length(), 0)});
    out[it->second].slots.at(g.level_of(e.bucket)) = static_cast<SlotIndex>(e.slot);
  }
  return out;
}

std::vector<std::uint64_t> leaf_histogram(const Trace& trace, const TreeGeometry& g) {
  std::vector<std::uint64_t> counts(g.leaf_count(), 0);
  for (Leaf l : access_leaves(trace)) ++counts.at(l);
  return counts;
}

ChiSquareResult uniformity_test(const std::vector<std::uint64_t>& counts) {
  ChiSquareResult r;
  for (auto c : counts) r.samples += c;
  if (counts.size() < 2 || r.samples == 0) return r;
  const double expected = static_cast<double>(r.samples) / static_cast<double>(counts.size());
  for (auto c : counts) {
    const double d = static_cast<double>(c) - expected;
    r.statistic += d * d / expected;
  }
  r.dof = static_cast<double>(counts.size() - 1);
  r.p_value = chi2_sf(r.statistic, r.dof);
  r.conclusive = r.samples >= 50 * counts.size();
  return r;
}

ChiSquareResult leaf_uniformity_test(const Trace& trace, const TreeGeometry& g) {
  return uniformity_test(leaf_histogram(trace, g));
}

ChiSquareResult two_sample_test(const std::vector<std::uint64_t>& a,
                                const std::vector<std::uint64_t>& b) {
  ChiSquareResult r;
  double na = 0, nb = 0;
  for (auto c : a) na += static_cast<double>(c);
  for (auto c : b) nb += static_cast<double>(c);
  r.samples = static_cast<std::uint64_t>(na + nb);
  if (a.size() != b.size() || na == 0 || nb == 0) return r;
  std::size_t used = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0) continue;
    ++used;
    const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    r.statistic += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  r.dof = used > 1 ? static_cast<double>(used - 1) : 0;
  r.p_value = chi2_sf(r.statistic, r.dof);
  r.conclusive = used > 1 && std::min(na, nb) >= 5.0 * static_cast<double>(used);
  return r;
}

std::vector<SlotReuse> slot_reuse_check(const Trace& trace) {
  std::vector<SlotReuse> out;
  std::map<BucketId, std::set<std::uint32_t>> window;
  for (const auto& e : trace) {
    switch (e.kind) {
      case EventKind::kRead:
        if (!window[e.bucket].insert(e.slot).second) {
          out.push_back({e.seq, e.bucket, static_cast<SlotIndex>(e.slot)});
        }
        break;
      case EventKind::kWrite:
        window[e.bucket].clear();
        break;
      case EventKind::kRollback:
        window.clear();
        break;
      default:
        break;
    }
  }
  return out;
}

std::map<std::uint64_t, EpochAccessSet> observed_access_sets(const Trace& trace) {
  std::map<std::uint64_t, EpochAccessSet> out;
  for (const auto& e : trace) {
    if (e.kind == EventKind::kRead) {
      ++out[e.epoch].reads[{e.bucket, static_cast<SlotIndex>(e.slot)}];
    } else if (e.kind == EventKind::kWrite) {
      auto& s = out[e.epoch];
      if (!s.writes.emplace(e.bucket, e.version).second) s.duplicate_writes = true;
    }
  }
  return out;
}

std::map<std::uint64_t, EpochAccessSet> expand_sequential(const Trace& trace,
                                                          const TreeGeometry& g) {
  std::map<std::uint64_t, EpochAccessSet> out;
  std::map<BucketId, std::set<SlotIndex>> read_since_write;
  std::set<BucketId> written, expanded;
  std::uint64_t epoch = ~std::uint64_t{0};
  for (const auto& e : trace) {
    if (e.kind != EventKind::kRead && e.kind != EventKind::kWrite) continue;
    if (e.epoch != epoch) {
      epoch = e.epoch;
      written.clear();
      expanded.clear();
    }
    auto& set = out[epoch];
    const BucketId b = e.bucket;
    if (e.kind == EventKind::kWrite) {
      written.insert(b);
      expanded.erase(b);
      read_since_write[b].clear();
      set.writes[b] = e.version;
      continue;
    }
    const auto slot = static_cast<SlotIndex>(e.slot);
    const bool rewrite = e.has_tag && e.purpose != ReadPurpose::kAccess;
    if (!written.contains(b) && !expanded.contains(b)) {
      if (rewrite) {
        expanded.insert(b);
        const auto& done = read_since_write[b];
        for (SlotIndex s = 0; s < g.slots_per_bucket(); ++s) {
          if (!done.contains(s)) ++set.reads[{b, s}];
        }
      } else {
        ++set.reads[{b, slot}];
      }
    }
    read_since_write[b].insert(slot);
  }
  return out;
}

Verdict trace_equivalence(const Trace& parallel, const Trace& sequential, const TreeGeometry& g) {
  const auto got = observed_access_sets(parallel);
  const auto want = expand_sequential(sequential, g);
  std::set<std::uint64_t> epochs;
  for (const auto& [e, s] : got) epochs.insert(e);
  for (const auto& [e, s] : want) epochs.insert(e);
  static const EpochAccessSet kEmpty;
  for (auto e : epochs) {
    const auto& a = got.contains(e) ? got.at(e) : kEmpty;
    const auto& b = want.contains(e) ? want.at(e) : kEmpty;
    std::ostringstream why;
    if (a.duplicate_writes) {
      why << "epoch " << e << ": a bucket was written more than once";
      return {false, why.str()};
    }
    if (a.reads != b.reads) {
      why << "epoch " << e << ": read multisets differ (" << a.reads.size() << " vs "
          << b.reads.size() << " distinct slots)";
      return {false, why.str()};
    }
    if (a.writes != b.writes) {
      why << "epoch " << e << ": write sets differ (" << a.writes.size() << " vs "
          << b.writes.size() << " buckets)";
      return {false, why.str()};
    }
  }
  return {true, ""};
}

std::string structural_projection(const Trace& trace, bool include_counts) {
  struct Tick {
    std::vector<std::string> messages;
    std::set<std::uint64_t> access_ops, evict_ops;
    std::set<std::uint64_t> read_lens, write_lens;
  };
  std::map<std::pair<std::uint64_t, std::uint64_t>, Tick> ticks;
  for (const auto& e : trace) {
    auto& t = ticks[{e.epoch, e.tick}];
    switch (e.kind) {
      case EventKind::kRead:
        t.read_lens.insert(e.payload_len);
        if (e.has_tag && e.purpose == ReadPurpose::kAccess) t.access_ops.insert(e.op);
        if (e.has_tag && e.purpose == ReadPurpose::kEvict) t.evict_ops.insert(e.op);
        break;
      case EventKind::kWrite:
        t.write_lens.insert(e.payload_len);
        break;
      default: {
        std::ostringstream m;
        m << static_cast<int>(e.kind) << ':' << static_cast<int>(e.record_type) << ':'
          << e.counter << ':' << e.sub << ':' << e.payload_len;
        t.messages.push_back(m.str());
      }
    }
  }
  std::ostringstream out;
  for (const auto& [key, t] : ticks) {
    out << key.first << '.' << key.second << " |";
    for (const auto& m : t.messages) out << ' ' << m;
    if (include_counts) out << " | access=" << t.access_ops.size() << " evict=" << t.evict_ops.size();
    out << " | rlen=";
    for (auto l : t.read_lens) out << l << ',';
    out << " wlen=";
    for (auto l : t.write_lens) out << l << ',';
    out << '\n';
  }
  return out.str();
}

IndependenceResult workload_independence_test(const Trace& a, const Trace& b,
                                              const TreeGeometry& g, double alpha,
                                              bool include_counts) {
  IndependenceResult r;
  const auto pa = structural_projection(a, include_counts);
  const auto pb = structural_projection(b, include_counts);
  r.projection_equal = pa == pb;
  if (!r.projection_equal) {
    std::istringstream sa(pa), sb(pb);
    std::string la, lb;
    while (std::getline(sa, la) && std::getline(sb, lb)) {
      if (la != lb) {
        r.detail = "first difference: [" + la + "] vs [" + lb + "]";
        break;
      }
    }
    if (r.detail.empty()) r.detail = "projections differ in length";
  }
  r.leaves = two_sample_test(leaf_histogram(a, g), leaf_histogram(b, g));
  r.ok = r.projection_equal && r.leaves.p_value > alpha;
  return r;
}

}  // namespace okv
