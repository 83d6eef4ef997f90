#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tabprobe/cache.hpp"
#include "tabprobe/oracle.hpp"
#include "tabprobe/prompt.hpp"
#include "tabprobe/trial.hpp"

namespace tabprobe {

struct RunOptions {
  std::string model_name;
  std::size_t parallelism = 1;  // requests in flight
  PromptOptions prompt;
  ResponseCache* cache = nullptr;
  /// Probes for which this returns true are not run (resume).
  std::function<bool(const std::string& probe_id)> skip;
  /// Called once per finished trial, in completion order, serialized.
  std::function<void(const TrialRecord&)> on_trial;
};

/// Renders, queries and parses every probe. Unparseable answers get exactly
/// one stricter re-query. Output follows probe order whatever the completion
/// order. A PermanentFailure stops dispatch and is rethrown once in-flight
/// requests drain; exhausted transient retries yield a Failed trial.
std::vector<TrialRecord> run_probe_set(const Oracle& oracle, const ProbeSet& probes, const RunOptions& options);

}  // namespace tabprobe
