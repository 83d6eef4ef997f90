#include "tabprobe/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "tabprobe/error.hpp"

namespace tabprobe {
namespace {

Completion query(const Oracle& oracle, const PromptText& prompt, const ProbeContext& ctx, ResponseCache* cache) {
  if (cache) return cached_complete(*cache, oracle, prompt, ctx).completion;
  return complete(oracle, prompt, ctx);
}

TrialRecord run_one(const Oracle& oracle, const ProbeSet& set, const Probe& probe, const RunOptions& options) {
  TrialRecord t;
  t.probe_id = probe_id(probe);
  t.dataset_id = set.dataset_id;
  t.variant = set.variant;
  t.task = set.task;
  t.model_name = options.model_name;
  t.truth_index = truth_index(probe);
  t.option_count = kOptionCount;

  const ProbeContext ctx{set, probe};
  auto prompt = render_prompt(probe, set, options.prompt);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto completion = query(oracle, prompt, ctx, options.cache);
    t.attempt_count = 1;
    auto parsed = parse_answer(completion.text, prompt.option_count, prompt.option_texts);
    if (!parsed) {
      prompt.user_text += kStrictSuffix;
      completion = query(oracle, prompt, ctx, options.cache);
      t.attempt_count = 2;
      parsed = parse_answer(completion.text, prompt.option_count, prompt.option_texts);
    }
    t.response = std::move(completion.text);
    t.answer_index = parsed;
    t.status = parsed ? TrialStatus::Answered : TrialStatus::Unparseable;
  } catch (const TransientFailure& e) {
    t.attempt_count = std::max(t.attempt_count, 1);
    t.status = TrialStatus::Failed;
    t.answer_index.reset();
    t.error = e.what();
  }
  // Mock oracles answer in-process; only network latency is recorded so that
  // mock runs stay byte-reproducible.
  if (is_remote(oracle)) {
    t.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  }
  t.correct = t.status == TrialStatus::Answered && t.answer_index == t.truth_index;
  return t;
}

}  // namespace

std::vector<TrialRecord> run_probe_set(const Oracle& oracle, const ProbeSet& probes, const RunOptions& options) {
  if (options.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < probes.probes.size(); ++i) {
    if (!options.skip || !options.skip(probe_id(probes.probes[i]))) todo.push_back(i);
  }

  std::vector<std::optional<TrialRecord>> results(probes.probes.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex mutex;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const auto slot = next.fetch_add(1);
      if (slot >= todo.size()) return;
      const auto i = todo[slot];
      try {
        auto trial = run_one(oracle, probes, probes.probes[i], options);
        std::lock_guard lock(mutex);
        if (options.on_trial) options.on_trial(trial);
        results[i] = std::move(trial);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const auto threads = std::min(options.parallelism, std::max<std::size_t>(todo.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TrialRecord> out;
  out.reserve(todo.size());
  for (auto& r : results) {
    if (r) out.push_back(std::move(*r));
  }
  return out;
}

}  // namespace tabprobe
