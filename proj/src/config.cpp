#include "tabprobe/config.hpp"

#include <algorithm>
#include <set>

#include "tabprobe/error.hpp"
#include "tabprobe/hash.hpp"

namespace tabprobe {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T field(const nlohmann::json& j, const char* name, T fallback) {
  if (!j.contains(name) || j[name].is_null()) return fallback;
  try {
    return j[name].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + name + "' has the wrong type");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig cfg;
  if (!doc.contains("datasets") || !doc["datasets"].is_array()) throw ConfigError("config needs a 'datasets' array");
  for (const auto& d : doc["datasets"]) {
    DatasetSpec spec;
    spec.id = field<std::string>(d, "id", "");
    const auto csv = field<std::string>(d, "csv_path", "");
    if (csv.empty()) throw ConfigError("dataset '" + spec.id + "' has no csv_path");
    spec.csv_path = resolve(base_dir, csv);
    spec.semantic = field<bool>(d, "semantic", true);
    if (d.contains("kind_hints")) {
      if (!d["kind_hints"].is_object()) throw ConfigError("kind_hints of '" + spec.id + "' must be an object");
      for (const auto& [name, kind] : d["kind_hints"].items()) {
        spec.kind_hints.emplace(name, parse_column_kind(kind.get<std::string>()));
      }
    }
    cfg.datasets.push_back(std::move(spec));
  }
  if (doc.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : doc["variants"]) cfg.variants.push_back(parse_variant(v.get<std::string>()));
  }
  if (doc.contains("tasks")) {
    cfg.tasks.clear();
    for (const auto& t : doc["tasks"]) cfg.tasks.push_back(parse_task(t.get<std::string>()));
  }
  cfg.n_records = field<std::size_t>(doc, "n_records", cfg.n_records);
  cfg.seed = field<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.alpha = field<double>(doc, "alpha", cfg.alpha);
  cfg.reveal_dataset_name = field<bool>(doc, "reveal_dataset_name", cfg.reveal_dataset_name);
  cfg.template_version = field<std::string>(doc, "template_version", cfg.template_version);
  cfg.cache_dir = resolve(base_dir, field<std::string>(doc, "cache_dir", "cache"));
  cfg.out_dir = resolve(base_dir, field<std::string>(doc, "out_dir", "runs"));

  if (doc.contains("oracles")) {
    for (const auto& o : doc["oracles"]) {
      OracleSpec spec;
      spec.type = field<std::string>(o, "type", "");
      spec.name = field<std::string>(o, "name", spec.type);
      spec.seed = field<std::uint64_t>(o, "seed", 0);
      spec.parallelism = field<int>(o, "parallelism", 4);
      if (spec.type == "remote") {
        auto& e = spec.endpoint;
        e.base_url = field<std::string>(o, "base_url", "");
        e.model_name = field<std::string>(o, "model", spec.name);
        e.api_key_env = field<std::string>(o, "api_key_env", "");
        e.temperature = field<double>(o, "temperature", e.temperature);
        e.max_tokens = field<int>(o, "max_tokens", e.max_tokens);
        e.timeout_ms = field<int>(o, "timeout_ms", e.timeout_ms);
        e.max_retries = field<int>(o, "max_retries", e.max_retries);
        e.backoff_base_ms = field<int>(o, "backoff_base_ms", e.backoff_base_ms);
        e.backoff_max_ms = field<int>(o, "backoff_max_ms", e.backoff_max_ms);
        e.parallelism = spec.parallelism;
      }
      cfg.oracles.push_back(std::move(spec));
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config '" + path.string() + "'");
  }
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config '" + path.string() + "' is not valid JSON");
  const auto base = std::filesystem::absolute(path).parent_path();
  return from_json(doc, base);
}

void RunConfig::validate() const {
  if (datasets.empty()) throw ConfigError("config lists no datasets");
  std::set<std::string> ids;
  for (const auto& d : datasets) {
    if (d.id.empty()) throw ConfigError("dataset id must not be empty");
    if (d.id.find_first_of("/\\:. ") != std::string::npos) {
      throw ConfigError("dataset id '" + d.id + "' may not contain '/', '\\\\', ':', '.' or spaces");
    }
    if (!ids.insert(d.id).second) throw ConfigError("duplicate dataset id '" + d.id + "'");
  }
  if (variants.empty()) throw ConfigError("config selects no variants");
  if (tasks.empty()) throw ConfigError("config selects no tasks");
  if (n_records == 0) throw ConfigError("n_records must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (template_version != kTemplateVersion) throw ConfigError("unknown template_version '" + template_version + "'");
  std::set<std::string> names;
  for (const auto& o : oracles) {
    if (o.name.empty() || o.name.find_first_of("/\\ ") != std::string::npos) {
      throw ConfigError("oracle name '" + o.name + "' is empty or contains '/', '\\\\' or spaces");
    }
    if (!names.insert(o.name).second) throw ConfigError("duplicate oracle name '" + o.name + "'");
    if (o.parallelism < 1) throw ConfigError("oracle '" + o.name + "': parallelism must be at least 1");
    if (o.type == "remote") {
      o.endpoint.validate();
    } else if (o.type != "uniform_random" && o.type != "memorizing" && o.type != "always_first") {
      throw ConfigError("oracle '" + o.name + "' has unknown type '" + o.type + "'");
    }
  }
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["datasets"] = nlohmann::ordered_json::array();
  for (const auto& d : datasets) {
    nlohmann::ordered_json dj;
    dj["id"] = d.id;
    dj["csv_path"] = d.csv_path.string();
    dj["semantic"] = d.semantic;
    dj["kind_hints"] = nlohmann::ordered_json::object();
    for (const auto& [name, kind] : d.kind_hints) dj["kind_hints"][name] = std::string(to_string(kind));
    j["datasets"].push_back(std::move(dj));
  }
  j["variants"] = nlohmann::ordered_json::array();
  for (auto v : variants) j["variants"].push_back(std::string(to_string(v)));
  j["tasks"] = nlohmann::ordered_json::array();
  for (auto t : tasks) j["tasks"].push_back(std::string(to_string(t)));
  j["n_records"] = n_records;
  j["seed"] = seed;
  j["oracles"] = nlohmann::ordered_json::array();
  for (const auto& o : oracles) {
    nlohmann::ordered_json oj;
    oj["name"] = o.name;
    oj["type"] = o.type;
    oj["seed"] = o.seed;
    oj["parallelism"] = o.parallelism;
    if (o.type == "remote") {
      oj["base_url"] = o.endpoint.base_url;
      oj["model"] = o.endpoint.model_name;
      oj["api_key_env"] = o.endpoint.api_key_env;
      oj["temperature"] = o.endpoint.temperature;
      oj["max_tokens"] = o.endpoint.max_tokens;
      oj["timeout_ms"] = o.endpoint.timeout_ms;
      oj["max_retries"] = o.endpoint.max_retries;
      oj["backoff_base_ms"] = o.endpoint.backoff_base_ms;
      oj["backoff_max_ms"] = o.endpoint.backoff_max_ms;
    }
    j["oracles"].push_back(std::move(oj));
  }
  j["alpha"] = alpha;
  j["cache_dir"] = cache_dir.string();
  j["out_dir"] = out_dir.string();
  j["reveal_dataset_name"] = reveal_dataset_name;
  j["template_version"] = template_version;
  return j;
}

std::string RunConfig::digest() const { return sha256_hex(to_json().dump()); }

bool RunConfig::wants(Variant v) const { return std::find(variants.begin(), variants.end(), v) != variants.end(); }

bool RunConfig::wants(Task t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

const OracleSpec* RunConfig::find_oracle(const std::string& name) const {
  for (const auto& o : oracles) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

}  // namespace tabprobe
