// Command-line harness: runs a proxy against local or remote storage,
// sweeps crash points, checks traces and serves storage over TCP.

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "okv/common/errors.hpp"
#include "okv/observer/analysis.hpp"
#include "okv/storage/malicious.hpp"
#include "okv/storage/transport.hpp"
#include "okv/workload/bench.hpp"
#include "okv/workload/config.hpp"
#include "okv/workload/crash_sweep.hpp"
#include "okv/workload/runner.hpp"

using json = nlohmann::ordered_json;
using namespace okv;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "config file (key = value lines)");
    app->add_option("--set", sets, "override one config key, as key=value")->take_all();
  }

  HarnessConfig load() const {
    HarnessConfig cfg = file.empty() ? HarnessConfig{} : load_config(file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    cfg.proxy.validate();
    cfg.workload.validate();
    return cfg;
  }
};

json chi_json(const ChiSquareResult& r) {
  return {{"statistic", r.statistic},
          {"dof", r.dof},
          {"p_value", r.p_value},
          {"samples", r.samples},
          {"conclusive", r.conclusive}};
}

json geometry_json(const TreeGeometry& g) {
  return {{"N", g.capacity}, {"Z", g.real_slots}, {"S", g.dummy_slots},
          {"A", g.evict_rate}, {"L", g.levels}};
}

json config_json(const HarnessConfig& c) {
  const auto& e = c.proxy.epoch;
  return {{"tree", geometry_json(c.proxy.geometry)},
          {"epoch", {{"R", e.read_batches}, {"b_read", e.read_batch_size},
                     {"b_write", e.write_batch_size}, {"delta", e.delta}}},
          {"mode", c.proxy.mode == ExecMode::kSequential ? "sequential" : "parallel"},
          {"integrity", c.proxy.integrity},
          {"block_size", c.proxy.block_size},
          {"stash_bound", c.proxy.stash_bound},
          {"workload", to_string(c.workload.kind)},
          {"txns", c.workload.txns},
          {"seed", c.workload.seed}};
}

void emit(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trace " + path);
  return import_trace(in);
}

int cmd_run(HarnessConfig cfg, std::uint64_t ticks, const std::string& crashes,
            const std::string& attacks, const std::string& trace_path,
            const std::string& report_path) {
  if (ticks > 0) cfg.workload.txns = std::max<std::uint64_t>(cfg.workload.txns, 1'000'000'000);
  auto opts = cfg.deployment();
  if (!attacks.empty()) opts.attacks = load_attack_script(attacks);
  Deployment d(opts);
  CrashSchedule schedule;
  if (!crashes.empty()) schedule = CrashSchedule::parse(crashes);

  json report = {{"config", config_json(cfg)}};
  int rc = 0;
  try {
    RunOptions ro;
    ro.crashes = crashes.empty() ? nullptr : &schedule;
    if (ticks > 0) ro.max_ticks = ticks;
    auto r = Runner(d, cfg.workload).run(ro);
    const auto trace = d.trace().snapshot();
    const auto reuse = slot_reuse_check(trace);
    // Parallel runs serve buffered buckets locally, so only a sequential
    // trace shows every path access.
    const bool complete = cfg.proxy.mode == ExecMode::kSequential;
    const auto uniform = leaf_uniformity_test(trace, cfg.proxy.geometry);
    report["committed"] = r.committed;
    report["aborted"] = r.aborted;
    report["ticks"] = r.ticks;
    report["epochs"] = r.epochs;
    report["crashes"] = r.crashes;
    report["recoveries"] = r.recoveries;
    report["seconds"] = r.seconds;
    report["throughput_txn_per_sec"] = r.throughput;
    report["latency_ticks"] = {{"mean", r.latency_ticks.mean},
                               {"p50", r.latency_ticks.p50},
                               {"p99", r.latency_ticks.p99}};
    report["stash_high_water"] = r.stash_high_water;
    report["serializability"] = {{"serializable", r.serializability.ok()},
                                 {"acyclic", r.serializability.acyclic},
                                 {"replay_ok", r.serializability.replay_ok},
                                 {"recoverable", r.serializability.recoverable},
                                 {"witness", r.serializability.witness}};
    report["trace"] = {{"events", trace.size()},
                       {"slot_reuse", reuse.size()},
                       {"leaf_uniformity", complete ? chi_json(uniform) : json(nullptr)}};
    if (!r.serializability.ok() || !reuse.empty()) rc = 1;
  } catch (const IntegrityError& e) {
    report["integrity_error"] = e.what();
    rc = 3;
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    export_trace(d.trace().snapshot(), out);
  }
  emit(report, report_path);
  return rc;
}

json mode_json(const ModeMeasurement& m) {
  return {{"mode", m.mode == ExecMode::kSequential ? "sequential" : "parallel"},
          {"epochs", m.epochs},
          {"committed", m.committed},
          {"logical_accesses", m.logical_accesses},
          {"round_trips", m.round_trips},
          {"seconds", m.seconds},
          {"txn_per_sec", m.txn_per_sec},
          {"access_per_sec", m.access_per_sec},
          {"root_writes_per_epoch", m.root_writes_per_epoch},
          {"max_root_writes", m.max_root_writes}};
}

int cmd_bench(HarnessConfig cfg, std::uint64_t epochs, double latency_ms,
              const std::string& report_path) {
  if (latency_ms >= 0) {
    cfg.latency = std::chrono::microseconds(static_cast<std::int64_t>(latency_ms * 1000));
  }
  const auto seq = measure_mode(cfg, ExecMode::kSequential, epochs);
  const auto par = measure_mode(cfg, ExecMode::kParallel, epochs);
  json j = {{"config", config_json(cfg)},
            {"latency_ms", static_cast<double>(cfg.latency.count()) / 1000.0},
            {"sequential", mode_json(seq)},
            {"parallel", mode_json(par)},
            {"speedup_access", seq.access_per_sec > 0 ? par.access_per_sec / seq.access_per_sec : 0},
            {"speedup_txn", seq.txn_per_sec > 0 ? par.txn_per_sec / seq.txn_per_sec : 0}};
  emit(j, report_path);
  return 0;
}

int cmd_crash_sweep(const HarnessConfig& cfg, std::uint64_t epochs, bool nested,
                    const std::string& report_path) {
  SweepOptions o;
  o.epochs = epochs;
  o.nested = nested;
  const auto r = crash_sweep(cfg.proxy, cfg.workload, o);
  json cases = json::array();
  for (const auto& c : r.cases) {
    cases.push_back({{"point", c.point.str()},
                     {"nested", c.nested ? std::string(hook_name(*c.nested)) : ""},
                     {"nested_fired", c.nested_fired},
                     {"recovered_epoch", c.recovered_epoch},
                     {"replayed_batches", c.replayed_batches},
                     {"committed_readable", c.committed_readable},
                     {"crashed_epoch_gone", c.crashed_epoch_gone},
                     {"replay_verbatim", c.replay_verbatim},
                     {"converges", c.converges},
                     {"serializable", c.serializable},
                     {"ok", c.ok()},
                     {"detail", c.detail}});
  }
  emit({{"config", config_json(cfg)},
        {"cases", cases.size()},
        {"failures", r.failures()},
        {"results", cases}},
       report_path);
  return r.failures() == 0 ? 0 : 1;
}

int cmd_check_trace(const HarnessConfig& cfg, const std::string& path, const std::string& against,
                    const std::string& sequential, const std::string& report_path) {
  const auto trace = read_trace(path);
  const auto& g = cfg.proxy.geometry;
  const auto reuse = slot_reuse_check(trace);
  json j = {{"trace", path},
            {"events", trace.size()},
            {"path_accesses", access_leaves(trace).size()},
            {"slot_reuse", reuse.size()},
            {"leaf_uniformity", chi_json(leaf_uniformity_test(trace, g))}};
  bool ok = reuse.empty();
  if (!against.empty()) {
    const auto other = read_trace(against);
    const bool counts = cfg.proxy.mode == ExecMode::kSequential;
    auto r = workload_independence_test(trace, other, g, 0.01, counts);
    j["independence"] = {{"against", against},
                         {"projection_equal", r.projection_equal},
                         {"two_sample", chi_json(r.leaves)},
                         {"ok", r.ok},
                         {"detail", r.detail}};
    ok = ok && r.ok;
  }
  if (!sequential.empty()) {
    auto v = trace_equivalence(trace, read_trace(sequential), g);
    j["equivalence"] = {{"sequential", sequential}, {"ok", v.ok}, {"detail", v.detail}};
    ok = ok && v.ok;
  }
  j["ok"] = ok;
  emit(j, report_path);
  return ok ? 0 : 1;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_serve(const std::string& bind, std::uint16_t port, const std::string& data_dir,
              const std::string& attacks) {
  std::optional<std::filesystem::path> dir;
  if (!data_dir.empty()) dir = data_dir;
  StorageServer server(dir);
  std::unique_ptr<MaliciousServer> evil;
  RequestHandler* handler = &server;
  if (!attacks.empty()) {
    evil = std::make_unique<MaliciousServer>(server, load_attack_script(attacks));
    handler = evil.get();
  }
  TcpServer tcp(*handler, bind, port);
  std::cerr << "storage listening on " << bind << ":" << tcp.port()
            << (evil ? " (malicious)" : "") << std::endl;
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  tcp.stop();
  return 0;
}

int cmd_recover(const HarnessConfig& cfg, bool read_keys, const std::string& report_path) {
  if (!cfg.data_dir) throw ConfigError("recover needs data_dir (the trusted counter lives there)");
  Deployment d(cfg.deployment());
  json j = {{"config", config_json(cfg)}};
  try {
    auto& p = d.restart();
    j["epoch"] = p.epoch();
    if (const auto& rec = p.last_recovery()) {
      j["recovered_epoch"] = rec->epoch;
      j["replayed_batches"] = rec->batches;
      j["replayed_accesses"] = rec->replayed.size();
      j["replay_matches_log"] = rec->replayed == rec->logged;
    } else {
      j["recovered_epoch"] = nullptr;
    }
    if (read_keys) {
      std::vector<Key> keys;
      for (std::uint64_t i = 0; i < cfg.workload.key_space; ++i) {
        keys.push_back(cfg.workload.key_offset + i);
      }
      json values = json::object();
      for (const auto& [k, v] : read_back(p, keys)) values[std::to_string(k)] = v;
      j["values"] = values;
    }
  } catch (const IntegrityError& e) {
    j["integrity_error"] = e.what();
    emit(j, report_path);
    return 3;
  }
  emit(j, report_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oblivious transactional key-value store harness"};
  app.require_subcommand(1);
  std::string report = "-";

  ConfigArgs run_cfg, bench_cfg, sweep_cfg, check_cfg, recover_cfg;

  auto* run = app.add_subcommand("run", "run a workload and report");
  run_cfg.attach(run);
  std::string crashes, attacks, trace_out;
  std::uint64_t run_ticks = 0;
  run->add_option("--ticks", run_ticks, "run exactly this many ticks instead of a txn count");
  run->add_option("--crashes", crashes, "crash schedule: e:hook[:occ],... or random:seed:p");
  run->add_option("--attacks", attacks, "attack script; makes the in-process server malicious");
  run->add_option("--trace", trace_out, "write the adversary's trace here");
  run->add_option("--report", report, "report file, - for stdout");

  auto* bench = app.add_subcommand("bench", "compare sequential and parallel execution");
  bench_cfg.attach(bench);
  std::uint64_t bench_epochs = 1;
  double latency_ms = -1;
  bench->add_option("--epochs", bench_epochs, "epochs per mode");
  bench->add_option("--latency-ms", latency_ms, "simulated storage latency (overrides config)");
  bench->add_option("--report", report, "report file, - for stdout");

  auto* sweep = app.add_subcommand("crash-sweep", "crash at every hook point and verify recovery");
  sweep_cfg.attach(sweep);
  std::uint64_t sweep_epochs = 3;
  bool no_nested = false;
  sweep->add_option("--epochs", sweep_epochs, "crash in each of epochs 1..n");
  sweep->add_flag("--no-nested", no_nested, "skip the nested recovery crashes");
  sweep->add_option("--report", report, "report file, - for stdout");

  auto* check = app.add_subcommand("check-trace", "run the trace tests on a saved trace");
  check_cfg.attach(check);
  std::string trace_in, against, sequential;
  check->add_option("trace", trace_in, "trace file")->required();
  check->add_option("--against", against, "second trace for the independence test");
  check->add_option("--sequential", sequential, "sequential trace to check equivalence against");
  check->add_option("--report", report, "report file, - for stdout");

  auto* serve = app.add_subcommand("serve-storage", "serve bucket storage over TCP");
  std::string bind = "127.0.0.1", data_dir, serve_attacks;
  std::uint16_t port = 7420;
  serve->add_option("--bind", bind, "address to bind");
  serve->add_option("--port", port, "port, 0 for any");
  serve->add_option("--data-dir", data_dir, "keep buckets and log here");
  serve->add_option("--attacks", serve_attacks, "attack script");

  auto* recover = app.add_subcommand("recover", "recover a file-backed deployment");
  recover_cfg.attach(recover);
  bool read_keys = false;
  recover->add_flag("--read", read_keys, "read back the workload's key range");
  recover->add_option("--report", report, "report file, - for stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_cfg.load(), run_ticks, crashes, attacks, trace_out, report);
    if (*bench) return cmd_bench(bench_cfg.load(), bench_epochs, latency_ms, report);
    if (*sweep) return cmd_crash_sweep(sweep_cfg.load(), sweep_epochs, !no_nested, report);
    if (*check) return cmd_check_trace(check_cfg.load(), trace_in, against, sequential, report);
    if (*serve) return cmd_serve(bind, port, data_dir, serve_attacks);
    if (*recover) return cmd_recover(recover_cfg.load(), read_keys, report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
