#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "okv/workload/deployment.hpp"

namespace okv {

/// The four-transaction example epoch: t1 writes a and c and reads b late,
/// t2 reads d and then tries to overwrite it, t3 reads d from the version
/// cache, reads t1's uncommitted a and writes c, t4 only writes and never
/// finishes.
struct ScriptedResult {
  std::map<std::string, bool> committed;   // "t1".."t4"
  bool t2_aborted_on_write = false;
  bool t3_depends_on_t1 = false;
  bool d_served_from_cache = false;
  bool b_spilled_to_second_batch = false;
  std::vector<std::uint64_t> batch_real_reads;
  std::map<std::string, std::string> write_batch;  // object name -> value
};

ScriptedResult run_scripted_history(Deployment& d);

}  // namespace okv
