#include "tabprobe/oracle.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "tabprobe/error.hpp"
#include "tabprobe/log.hpp"

namespace tabprobe {

void EndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (model_name.empty()) throw ConfigError("endpoint model is empty");
  if (parallelism < 1) throw ConfigError("endpoint parallelism must be at least 1");
  if (!(temperature >= 0.0)) throw ConfigError("endpoint temperature must be non-negative");
  if (max_tokens < 1) throw ConfigError("endpoint max_tokens must be positive");
  if (max_retries < 0) throw ConfigError("endpoint max_retries must be non-negative");
  if (timeout_ms < 1) throw ConfigError("endpoint timeout_ms must be positive");
  if (backoff_base_ms < 0 || backoff_max_ms < backoff_base_ms) throw ConfigError("invalid backoff bounds");
}

void ReferenceLibrary::add(Dataset ds) {
  Entry e;
  for (const auto& row : ds.rows) e.rendered_rows.insert(render_record(row, ds.schema));
  auto id = ds.source_id;
  e.dataset = std::move(ds);
  entries_.insert_or_assign(std::move(id), std::move(e));
}

const ReferenceLibrary::Entry* ReferenceLibrary::find(const std::string& dataset_id) const {
  const auto it = entries_.find(dataset_id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> ReferenceLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, entry] : entries_) out.push_back(id);
  return out;
}

std::string oracle_identity(const Oracle& oracle) {
  struct {
    std::string operator()(const RemoteOracle& o) const {
      return "remote:" + o.endpoint.model_name + "@" + o.endpoint.base_url;
    }
    std::string operator()(const UniformRandomOracle& o) const { return "uniform_random:seed=" + std::to_string(o.seed); }
    std::string operator()(const MemorizingOracle& o) const { return "memorizing:seed=" + std::to_string(o.seed); }
    std::string operator()(const AlwaysFirstOracle&) const { return "always_first"; }
  } visitor;
  return std::visit(visitor, oracle);
}

bool is_remote(const Oracle& oracle) { return std::holds_alternative<RemoteOracle>(oracle); }

char uniform_letter(std::uint64_t seed, const PromptText& prompt) {
  const auto h = derive_seed(seed, prompt.system_text + '\0' + prompt.user_text);
  return option_letter(static_cast<std::size_t>(h % prompt.option_count));
}

namespace {

Completion letter(char c) { return {std::string(1, c), 1}; }

Completion memorize(const MemorizingOracle& o, const PromptText& prompt, const ProbeContext& ctx) {
  const auto* ref = o.reference ? o.reference->find(ctx.set.dataset_id) : nullptr;
  if (ref) {
    if (const auto* c = std::get_if<CompletionProbe>(&ctx.probe)) {
      const auto& rows = ref->dataset.rows;
      const auto masked = c->masked_column.position;
      if (c->row_index < rows.size() && masked < ref->dataset.column_count()) {
        const auto& row = rows[c->row_index];
        if (render_record(row, ref->dataset.schema, masked) == render_record(c->visible_record, ctx.set.schema, masked)) {
          const auto recalled = row[masked].text();
          for (std::size_t i = 0; i < kOptionCount; ++i) {
            if (!row[masked].is_missing() && c->candidates[i].text() == recalled) return letter(option_letter(i));
          }
        }
      }
    } else {
      const auto& e = std::get<ExistenceProbe>(ctx.probe);
      for (std::size_t i = 0; i < kOptionCount; ++i) {
        if (ref->rendered_rows.contains(render_record(e.versions[i], ctx.set.schema))) return letter(option_letter(i));
      }
    }
  }
  return letter(uniform_letter(o.seed, prompt));
}

}  // namespace

Completion complete(const Oracle& oracle, const PromptText& prompt, const ProbeContext& context) {
  if (const auto* r = std::get_if<RemoteOracle>(&oracle)) return ChatClient(r->endpoint).complete(prompt);
  if (const auto* u = std::get_if<UniformRandomOracle>(&oracle)) return letter(uniform_letter(u->seed, prompt));
  if (const auto* m = std::get_if<MemorizingOracle>(&oracle)) return memorize(*m, prompt, context);
  return letter('A');
}

ChatClient::ChatClient(EndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme = config_.base_url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base_url must include a scheme: '" + config_.base_url + "'");
  const auto slash = config_.base_url.find('/', scheme + 3);
  host_ = config_.base_url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : config_.base_url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/v1/chat/completions";
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable '" + config_.api_key_env + "' holding the API key is not set");
    api_key_ = key;
  }
}

namespace {

std::chrono::milliseconds backoff_delay(const EndpointConfig& cfg, int attempt) {
  thread_local std::mt19937_64 jitter{std::random_device{}()};
  double delay = static_cast<double>(cfg.backoff_base_ms);
  for (int i = 0; i < attempt && delay < cfg.backoff_max_ms; ++i) delay *= 2.0;
  delay = std::min(delay, static_cast<double>(cfg.backoff_max_ms));
  // Equal jitter: half fixed, half uniform.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(jitter);
  return std::chrono::milliseconds(static_cast<long long>(delay * (0.5 + 0.5 * u)));
}

}  // namespace

Completion ChatClient::complete(const PromptText& prompt) const {
  nlohmann::ordered_json body;
  body["model"] = config_.model_name;
  body["messages"] = nlohmann::ordered_json::array({
      {{"role", "system"}, {"content", prompt.system_text}},
      {{"role", "user"}, {"content", prompt.user_text}},
  });
  body["temperature"] = config_.temperature;
  body["max_tokens"] = config_.max_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  httplib::Client client(host_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(backoff_delay(config_, attempt - 1));
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status == 429 || status >= 500) {
      last_error = "HTTP " + std::to_string(status);
      continue;
    }
    if (status < 200 || status >= 300) {
      throw PermanentFailure(config_.model_name + ": HTTP " + std::to_string(status) + " from " + host_ + path_ +
                                 ": " + res->body.substr(0, 200),
                             status);
    }
    const auto doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty() ||
        !doc["choices"][0].contains("message") || !doc["choices"][0]["message"].contains("content")) {
      last_error = "malformed completion body";
      continue;
    }
    const auto& content = doc["choices"][0]["message"]["content"];
    return {content.is_string() ? content.get<std::string>() : std::string(), attempt + 1};
  }
  log_warning(config_.model_name + ": giving up after " + std::to_string(config_.max_retries + 1) +
              " attempts (" + last_error + ")");
  throw TransientFailure(config_.model_name + ": " + last_error + " after " + std::to_string(config_.max_retries + 1) +
                         " attempts");
}

}  // namespace tabprobe
