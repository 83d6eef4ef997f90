#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/probes.hpp"
#include "tabprobe/prompt.hpp"

namespace tabprobe {

struct EndpointConfig {
  std::string base_url;     // e.g. http://127.0.0.1:8000
  std::string model_name;
  std::string api_key_env;  // empty: no Authorization header
  double temperature = 0.0;
  int max_tokens = 16;
  int timeout_ms = 60000;
  int max_retries = 5;
  int parallelism = 4;
  int backoff_base_ms = 500;
  int backoff_max_ms = 30000;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Real datasets a memorizing oracle "has seen", indexed by dataset id.
class ReferenceLibrary {
 public:
  struct Entry {
    Dataset dataset;
    std::unordered_set<std::string> rendered_rows;
  };

  void add(Dataset ds);
  const Entry* find(const std::string& dataset_id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

struct RemoteOracle {
  EndpointConfig endpoint;
};

/// Answers a uniformly random letter, keyed on (seed, prompt text).
struct UniformRandomOracle {
  std::uint64_t seed = 0;
};

/// Recalls verbatim rows of its reference datasets; falls back to a seeded
/// uniform letter when the probed record is not in the reference.
struct MemorizingOracle {
  std::shared_ptr<const ReferenceLibrary> reference;
  std::uint64_t seed = 0;
};

struct AlwaysFirstOracle {};

using Oracle = std::variant<RemoteOracle, UniformRandomOracle, MemorizingOracle, AlwaysFirstOracle>;

/// Stable identity string; part of the response cache key.
std::string oracle_identity(const Oracle& oracle);
bool is_remote(const Oracle& oracle);

struct ProbeContext {
  const ProbeSet& set;
  const Probe& probe;
};

struct Completion {
  std::string text;
  int attempts = 1;  // HTTP attempts for remote oracles, 1 for mocks
};

/// One zero-shot query. Remote failures surface as TransientFailure (after
/// retries) or PermanentFailure.
Completion complete(const Oracle& oracle, const PromptText& prompt, const ProbeContext& context);

/// Letter a uniform guesser picks for this prompt text.
char uniform_letter(std::uint64_t seed, const PromptText& prompt);

/// OpenAI-compatible chat-completions client with retry and backoff.
class ChatClient {
 public:
  explicit ChatClient(EndpointConfig config);
  Completion complete(const PromptText& prompt) const;
  const EndpointConfig& config() const noexcept { return config_; }

 private:
  EndpointConfig config_;
  std::string host_;  // scheme://host[:port]
  std::string path_;  // path prefix + /v1/chat/completions
  std::string api_key_;
};

}  // namespace tabprobe
