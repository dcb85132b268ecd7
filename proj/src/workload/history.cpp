#include "okv/workload/history.hpp"

#include <algorithm>
#include <set>

#include "okv/workload/workload.hpp"

namespace okv {
namespace {

std::vector<const TxnRecord*> committed_by_ts(const std::vector<TxnRecord>& history) {
  std::vector<const TxnRecord*> out;
  for (const auto& t : history) {
    if (t.committed) out.push_back(&t);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->ts < b->ts; });
  return out;
}

struct Edge {
  std::uint64_t to;
  const char* kind;
};

}  // namespace

std::map<Key, std::string> committed_state(const std::vector<TxnRecord>& history) {
  std::map<Key, std::string> state;
  for (const auto* t : committed_by_ts(history)) {
    for (const auto& op : t->ops) {
      if (op.kind == HistoryOp::Kind::kWrite && op.value) state[op.key] = *op.value;
    }
  }
  return state;
}

SerializabilityVerdict check_serializability(const std::vector<TxnRecord>& history) {
  SerializabilityVerdict v;
  const auto txns = committed_by_ts(history);
  std::set<std::uint64_t> committed;
  for (const auto* t : txns) committed.insert(t->ts);

  // Version order per key: committed writers by timestamp, after the
  // initial (absent) version 0.
  std::map<Key, std::vector<std::uint64_t>> versions;
  for (const auto* t : txns) {
    std::set<Key> written;
    for (const auto& op : t->ops) {
      if (op.kind == HistoryOp::Kind::kWrite) written.insert(op.key);
    }
    for (Key k : written) versions[k].push_back(t->ts);
  }

  std::map<std::uint64_t, std::vector<Edge>> graph;
  for (const auto& [k, ws] : versions) {
    for (std::size_t i = 1; i < ws.size(); ++i) graph[ws[i - 1]].push_back({ws[i], "ww"});
  }
  for (const auto* t : txns) {
    std::set<Key> own;
    for (const auto& op : t->ops) {
      if (op.kind == HistoryOp::Kind::kWrite) {
        own.insert(op.key);
        continue;
      }
      if (own.contains(op.key)) continue;  // reads its own write
      const std::uint64_t w = op.value ? value_writer(*op.value) : 0;
      if (w == t->ts) continue;
      if (w != 0 && !committed.contains(w)) {
        v.recoverable = false;
        v.witness.push_back("t" + std::to_string(t->ts) + " read key " + std::to_string(op.key) +
                            " from uncommitted t" + std::to_string(w));
        continue;
      }
      if (w != 0) graph[w].push_back({t->ts, "wr"});
      // rw: the reader precedes whoever installed the next version.
      const auto& ws = versions[op.key];
      auto next = w == 0 ? ws.begin() : std::upper_bound(ws.begin(), ws.end(), w);
      if (next != ws.end() && *next != t->ts) graph[t->ts].push_back({*next, "rw"});
    }
  }

  // Iterative DFS with colours; the grey stack gives the cycle.
  std::map<std::uint64_t, int> colour;
  for (const auto* root : txns) {
    if (colour[root->ts] != 0 || !v.acyclic) continue;
    struct Frame {
      std::uint64_t node;
      std::size_t next;
      const char* via;
    };
    std::vector<Frame> stack{{root->ts, 0, ""}};
    colour[root->ts] = 1;
    while (!stack.empty() && v.acyclic) {
      auto& f = stack.back();
      const auto& out = graph[f.node];
      if (f.next == out.size()) {
        colour[f.node] = 2;
        stack.pop_back();
        continue;
      }
      const Edge e = out[f.next++];
      if (colour[e.to] == 1) {
        v.acyclic = false;
        auto start = std::find_if(stack.begin(), stack.end(),
                                  [&](const Frame& x) { return x.node == e.to; });
        for (auto it = start; it != stack.end(); ++it) {
          const auto to = std::next(it) == stack.end() ? e.to : std::next(it)->node;
          const char* kind = std::next(it) == stack.end() ? e.kind : std::next(it)->via;
          v.witness.push_back("t" + std::to_string(it->node) + " -" + kind + "-> t" +
                              std::to_string(to));
        }
      } else if (colour[e.to] == 0) {
        colour[e.to] = 1;
        stack.push_back({e.to, 0, e.kind});
      }
    }
  }

  std::map<Key, std::string> state;
  for (const auto* t : txns) {
    for (const auto& op : t->ops) {
      if (op.kind == HistoryOp::Kind::kWrite) {
        if (op.value) state[op.key] = *op.value;
        continue;
      }
      auto it = state.find(op.key);
      const std::optional<std::string> expect =
          it == state.end() ? std::nullopt : std::optional(it->second);
      if (expect != op.value && v.replay_ok) {
        v.replay_ok = false;
        v.witness.push_back("replay: t" + std::to_string(t->ts) + " read key " +
                            std::to_string(op.key) + " as " + op.value.value_or("<absent>") +
                            ", timestamp order gives " + expect.value_or("<absent>"));
      }
    }
  }
  return v;
}

}  // namespace okv
