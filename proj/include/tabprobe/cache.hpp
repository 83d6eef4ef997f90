#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "tabprobe/oracle.hpp"

namespace tabprobe {

struct CacheKey {
  std::string model_identity;
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_tokens = 0;
  std::string template_version;

  static CacheKey for_request(const Oracle& oracle, const PromptText& prompt);
  nlohmann::ordered_json fields() const;
  /// SHA-256 of the canonical JSON of fields().
  std::string digest() const;
};

/// Content-addressed response store: <dir>/<first 4 hex digits>/<digest>.json.
class ResponseCache {
 public:
  struct Stats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t corrupt = 0;
    std::size_t writes = 0;
  };

  explicit ResponseCache(std::filesystem::path dir);

  /// Stored response, or nullopt on a miss. Unreadable or mismatching entries
  /// count as misses and are logged.
  std::optional<std::string> get(const CacheKey& key);
  void put(const CacheKey& key, const std::string& response);

  std::filesystem::path entry_path(const std::string& digest) const;
  Stats stats() const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::mutex& stripe(const std::string& digest);

  std::filesystem::path dir_;
  std::array<std::mutex, 64> stripes_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> corrupt_{0};
  std::atomic<std::size_t> writes_{0};
};

struct CachedCompletion {
  Completion completion;
  bool cache_hit = false;
};

/// Cache lookup first; on a miss, delegates to complete() and persists the answer.
CachedCompletion cached_complete(ResponseCache& cache, const Oracle& oracle, const PromptText& prompt,
                                 const ProbeContext& context);

}  // namespace tabprobe
