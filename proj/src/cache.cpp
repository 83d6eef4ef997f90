#include "tabprobe/cache.hpp"

#include <chrono>
#include <ctime>

#include "tabprobe/dataset.hpp"
#include "tabprobe/error.hpp"
#include "tabprobe/hash.hpp"
#include "tabprobe/log.hpp"

namespace tabprobe {

CacheKey CacheKey::for_request(const Oracle& oracle, const PromptText& prompt) {
  CacheKey key;
  key.model_identity = oracle_identity(oracle);
  key.system_text = prompt.system_text;
  key.user_text = prompt.user_text;
  key.template_version = prompt.template_version;
  if (const auto* r = std::get_if<RemoteOracle>(&oracle)) {
    key.temperature = r->endpoint.temperature;
    key.max_tokens = r->endpoint.max_tokens;
  }
  return key;
}

nlohmann::ordered_json CacheKey::fields() const {
  nlohmann::ordered_json j;
  j["model"] = model_identity;
  j["system_text"] = system_text;
  j["user_text"] = user_text;
  j["temperature"] = temperature;
  j["max_tokens"] = max_tokens;
  j["template_version"] = template_version;
  return j;
}

std::string CacheKey::digest() const { return sha256_hex(fields().dump()); }

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::entry_path(const std::string& digest) const {
  return dir_ / digest.substr(0, 4) / (digest + ".json");
}

std::mutex& ResponseCache::stripe(const std::string& digest) {
  return stripes_[std::stoul(digest.substr(0, 2), nullptr, 16) % stripes_.size()];
}

std::optional<std::string> ResponseCache::get(const CacheKey& key) {
  const auto digest = key.digest();
  const auto path = entry_path(digest);
  std::lock_guard lock(stripe(digest));
  if (!std::filesystem::exists(path)) {
    ++misses_;
    return std::nullopt;
  }
  try {
    const auto doc = nlohmann::json::parse(read_file(path));
    if (nlohmann::json(key.fields()) != doc.at("key")) throw Error("key fields do not match");
    ++hits_;
    return doc.at("response").get<std::string>();
  } catch (const std::exception& e) {
    ++corrupt_;
    ++misses_;
    log_warning("cache entry " + path.string() + " is unusable (" + e.what() + "); treating as a miss");
    return std::nullopt;
  }
}

void ResponseCache::put(const CacheKey& key, const std::string& response) {
  const auto digest = key.digest();
  nlohmann::ordered_json doc;
  doc["key"] = key.fields();
  doc["response"] = response;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  doc["timestamp"] = stamp;
  std::lock_guard lock(stripe(digest));
  write_file_atomic(entry_path(digest), doc.dump(2) + "\n");
  ++writes_;
}

ResponseCache::Stats ResponseCache::stats() const {
  return {hits_.load(), misses_.load(), corrupt_.load(), writes_.load()};
}

CachedCompletion cached_complete(ResponseCache& cache, const Oracle& oracle, const PromptText& prompt,
                                 const ProbeContext& context) {
  const auto key = CacheKey::for_request(oracle, prompt);
  if (auto hit = cache.get(key)) return {{std::move(*hit), 0}, true};
  auto completion = complete(oracle, prompt, context);
  cache.put(key, completion.text);
  return {std::move(completion), false};
}

}  // namespace tabprobe
