#include "tabprobe/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <mutex>
#include <unordered_map>

#include "tabprobe/error.hpp"
#include "tabprobe/hash.hpp"
#include "tabprobe/log.hpp"
#include "tabprobe/marginal.hpp"
#include "tabprobe/report.hpp"
#include "tabprobe/runner.hpp"
#include "tabprobe/variants.hpp"

namespace tabprobe {

namespace fs = std::filesystem;

bool RunManifest::stage_complete(const std::string& stage) const {
  return stages.contains(stage) && stages[stage].value("status", std::string{}) == "complete";
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["config_digest"] = config_digest;
  j["stages"] = stages;
  j["probe_counts"] = probe_counts;
  j["trial_counts"] = trial_counts;
  j["skipped"] = skipped;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_digest = j.at("config_digest").get<std::string>();
  // Round-trip through text keeps the on-disk key order.
  const auto ordered = nlohmann::ordered_json::parse(j.dump());
  m.stages = ordered.at("stages");
  m.probe_counts = ordered.at("probe_counts");
  m.trial_counts = ordered.at("trial_counts");
  m.skipped = ordered.at("skipped");
  return m;
}

namespace {

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace

std::string Pipeline::stem(const std::string& dataset, Variant variant, Task task) {
  return dataset + "." + std::string(to_string(variant)) + "." + std::string(to_string(task));
}

std::string Pipeline::new_run_id(const RunConfig& config) {
  const auto prefix = config.digest().substr(0, 12) + "-" + utc_stamp();
  std::string id = prefix;
  for (int i = 2; fs::exists(config.out_dir / id); ++i) id = prefix + "-" + std::to_string(i);
  return id;
}

std::optional<std::string> Pipeline::latest_run_id(const RunConfig& config) {
  if (!fs::is_directory(config.out_dir)) return std::nullopt;
  const auto digest = config.digest();
  std::optional<std::string> best;
  fs::file_time_type best_time{};
  for (const auto& entry : fs::directory_iterator(config.out_dir)) {
    const auto manifest = entry.path() / "manifest.json";
    if (!entry.is_directory() || !fs::exists(manifest)) continue;
    const auto doc = nlohmann::json::parse(read_file(manifest), nullptr, false);
    if (doc.is_discarded() || doc.value("config_digest", std::string{}) != digest) continue;
    const auto name = entry.path().filename().string();
    const auto time = fs::last_write_time(manifest);
    if (!best || time > best_time || (time == best_time && name > *best)) {
      best = name;
      best_time = time;
    }
  }
  return best;
}

Pipeline::Pipeline(RunConfig config, std::string run_id)
    : config_(std::move(config)), run_id_(std::move(run_id)), run_dir_(config_.out_dir / run_id_) {
  if (run_id_.empty() || run_id_.find_first_of("/\\") != std::string::npos || run_id_ == "." || run_id_ == "..") {
    throw ConfigError("invalid run id '" + run_id_ + "'");
  }
  const auto manifest_path = run_dir_ / "manifest.json";
  if (fs::exists(manifest_path)) {
    manifest_ = RunManifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
    if (manifest_.config_digest != config_.digest()) {
      throw ConfigError("run '" + run_id_ + "' was created from a different config");
    }
  } else {
    manifest_.run_id = run_id_;
    manifest_.config_digest = config_.digest();
  }
}

void Pipeline::save_manifest() { write_file_atomic(run_dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n"); }

void Pipeline::require_stage(const std::string& stage) const {
  if (!manifest_.stage_complete(stage)) {
    throw ConfigError("run '" + run_id_ + "': stage '" + stage + "' has not completed");
  }
}

Dataset Pipeline::load_variant(const std::string& dataset, Variant variant) const {
  const auto base = data_dir() / (dataset + "." + std::string(to_string(variant)));
  auto schema_path = base;
  schema_path += ".schema.json";
  auto csv_path = base;
  csv_path += ".csv";
  const auto schema = nlohmann::json::parse(read_file(schema_path));
  KindHints hints;
  for (const auto& c : schema.at("columns")) {
    hints.emplace(c.at("name").get<std::string>(), parse_column_kind(c.at("kind").get<std::string>()));
  }
  auto ds = load_csv(csv_path, hints, dataset);
  ds.variant = variant;
  return ds;
}

StageOutcome Pipeline::prepare() {
  if (manifest_.stage_complete("prepare")) return {kExitOk, true, "prepare already complete"};
  fs::create_directories(data_dir());
  write_file_atomic(run_dir_ / "config.json", config_.to_json().dump(2) + "\n");

  std::size_t files = 0;
  for (const auto& spec : config_.datasets) {
    try {
      auto real = load_csv(spec.csv_path, spec.kind_hints, spec.id);
      auto emit = [&](const Dataset& ds) {
        const auto base = data_dir() / (spec.id + "." + std::string(to_string(ds.variant)));
        auto csv = base;
        csv += ".csv";
        auto schema = base;
        schema += ".schema.json";
        write_csv(csv, ds);
        write_file_atomic(schema, schema_dump(ds, rank_features(ds)).dump(2) + "\n");
        ++files;
      };
      emit(real);
      if (config_.wants(Variant::Like)) emit(make_like(real, derive_seed(config_.seed, "like/" + spec.id)));
      if (config_.wants(Variant::Obf)) {
        auto [obf, map] = make_obfuscated(real, config_.seed);
        emit(obf);
        write_file_atomic(data_dir() / (spec.id + ".obf.map.json"), map.to_json().dump(2) + "\n");
      }
    } catch (const DataError& e) {
      throw DataError("dataset '" + spec.id + "': " + e.what());
    }
  }
  manifest_.stages["prepare"] = {{"status", "complete"}, {"datasets", config_.datasets.size()}};
  save_manifest();
  return {kExitOk, false, "prepared " + std::to_string(files) + " dataset files"};
}

StageOutcome Pipeline::probe() {
  if (manifest_.stage_complete("probe")) return {kExitOk, true, "probe already complete"};
  require_stage("prepare");
  fs::create_directories(probes_dir());
  manifest_.probe_counts = nlohmann::ordered_json::object();
  manifest_.skipped = nlohmann::ordered_json::array();

  std::size_t total = 0;
  for (const auto& spec : config_.datasets) {
    for (const auto variant : config_.variants) {
      const auto ds = load_variant(spec.id, variant);
      const auto n = std::min(config_.n_records, ds.row_count());
      if (n < config_.n_records) {
        log_warning(spec.id + "/" + std::string(to_string(variant)) + ": only " + std::to_string(ds.row_count()) +
                    " rows; probing all of them");
      }
      for (const auto task : config_.tasks) {
        const auto key = stem(spec.id, variant, task);
        const auto seed = derive_seed(config_.seed, spec.id + "/" + std::string(to_string(task)));
        auto skip = [&](const std::string& reason) {
          log_warning("skipping " + key + ": " + reason);
          manifest_.skipped.push_back({{"dataset", spec.id},
                                       {"variant", std::string(to_string(variant))},
                                       {"task", std::string(to_string(task))},
                                       {"reason", reason}});
        };
        ProbeSet set;
        try {
          if (task == Task::Completion) {
            const auto pool = rank_features(ds);
            if (pool.empty()) {
              skip("no column has at least 5 distinct observed values, so 5-way completion probes are impossible");
              continue;
            }
            set = gen_completion(ds, pool, n, seed);
          } else {
            set = gen_existence(ds, n, seed);
          }
        } catch (const DataError& e) {
          skip(e.what());
          continue;
        }
        set.config.template_version = config_.template_version;
        write_probe_set(set, ProbeFiles::for_stem(probes_dir(), key));
        manifest_.probe_counts[key] = set.probes.size();
        total += set.probes.size();
      }
    }
  }
  manifest_.stages["probe"] = {{"status", "complete"}, {"probes", total}};
  save_manifest();
  return {kExitOk, false, "generated " + std::to_string(total) + " probes"};
}

std::vector<std::string> Pipeline::probe_stems() const {
  std::vector<std::string> out;
  for (const auto& spec : config_.datasets) {
    for (const auto variant : config_.variants) {
      for (const auto task : config_.tasks) {
        auto key = stem(spec.id, variant, task);
        if (manifest_.probe_counts.contains(key)) out.push_back(std::move(key));
      }
    }
  }
  return out;
}

StageOutcome Pipeline::run(const std::optional<std::string>& oracle_filter) {
  if (manifest_.stage_complete("run") && !oracle_filter) return {kExitOk, true, "run already complete"};
  require_stage("probe");
  if (config_.oracles.empty()) throw ConfigError("config lists no oracles");
  if (oracle_filter && !config_.find_oracle(*oracle_filter)) {
    throw ConfigError("no oracle named '" + *oracle_filter + "' in the config");
  }

  std::shared_ptr<ReferenceLibrary> reference;
  auto reference_library = [&] {
    if (!reference) {
      reference = std::make_shared<ReferenceLibrary>();
      for (const auto& spec : config_.datasets) reference->add(load_variant(spec.id, Variant::Real));
    }
    return reference;
  };

  std::vector<std::pair<const OracleSpec*, Oracle>> oracles;
  for (const auto& spec : config_.oracles) {
    if (oracle_filter && spec.name != *oracle_filter) continue;
    if (spec.type == "remote") {
      oracles.emplace_back(&spec, RemoteOracle{spec.endpoint});
    } else if (spec.type == "uniform_random") {
      oracles.emplace_back(&spec, UniformRandomOracle{spec.seed});
    } else if (spec.type == "memorizing") {
      oracles.emplace_back(&spec, MemorizingOracle{reference_library(), spec.seed});
    } else {
      oracles.emplace_back(&spec, AlwaysFirstOracle{});
    }
  }
  // Fail fast on missing API keys before any request is issued.
  for (const auto& [spec, oracle] : oracles) {
    if (const auto* r = std::get_if<RemoteOracle>(&oracle)) ChatClient{r->endpoint};
  }

  ResponseCache cache(config_.cache_dir);
  PromptOptions prompt_options{config_.reveal_dataset_name, config_.template_version};
  const auto stems = probe_stems();
  std::mutex manifest_mutex;

  struct OracleResult {
    std::size_t failed = 0;
    std::string permanent_error;
  };

  auto run_oracle = [&](const OracleSpec& spec, const Oracle& oracle) {
    OracleResult result;
    const auto dir = trials_dir() / spec.name;
    fs::create_directories(dir);
    for (const auto& key : stems) {
      const auto counts_key = spec.name + "/" + key;
      {
        std::lock_guard lock(manifest_mutex);
        if (manifest_.trial_counts.contains(counts_key) &&
            manifest_.trial_counts[counts_key].value("status", std::string{}) == "complete") {
          continue;
        }
      }
      const auto set = read_probe_set(ProbeFiles::for_stem(probes_dir(), key));
      const auto log_path = dir / (key + ".jsonl");
      std::unordered_map<std::string, TrialRecord> previous;
      if (fs::exists(log_path)) {
        for (auto& t : read_trials(log_path)) previous.insert_or_assign(t.probe_id, std::move(t));
      }

      RunOptions options;
      options.model_name = spec.name;
      options.parallelism = static_cast<std::size_t>(spec.parallelism);
      options.prompt = prompt_options;
      options.cache = is_remote(oracle) ? &cache : nullptr;
      options.skip = [&](const std::string& id) {
        const auto it = previous.find(id);
        return it != previous.end() && it->second.status != TrialStatus::Failed;
      };
      std::ofstream append(log_path, std::ios::app);
      options.on_trial = [&](const TrialRecord& t) { append << trial_to_json(t).dump() << '\n' << std::flush; };

      std::vector<TrialRecord> fresh;
      try {
        fresh = run_probe_set(oracle, set, options);
      } catch (const PermanentFailure& e) {
        result.permanent_error = e.what();
        log(LogLevel::Error, spec.name + ": " + e.what());
        std::lock_guard lock(manifest_mutex);
        manifest_.trial_counts[counts_key] = {{"status", "aborted"}, {"error", e.what()}};
        save_manifest();
        return result;
      }
      append.close();

      std::unordered_map<std::string, TrialRecord> merged_by_id = std::move(previous);
      for (auto& t : fresh) merged_by_id.insert_or_assign(t.probe_id, std::move(t));
      std::vector<TrialRecord> merged;
      std::size_t failed = 0;
      for (const auto& probe : set.probes) {
        const auto it = merged_by_id.find(probe_id(probe));
        if (it == merged_by_id.end()) continue;
        failed += it->second.status == TrialStatus::Failed;
        merged.push_back(it->second);
      }
      write_file_atomic(log_path, trials_to_jsonl(merged));
      result.failed += failed;
      std::lock_guard lock(manifest_mutex);
      manifest_.trial_counts[counts_key] = {
          {"status", failed ? "partial" : "complete"}, {"trials", merged.size()}, {"failed", failed}};
      save_manifest();
    }
    return result;
  };

  std::vector<std::future<OracleResult>> futures;
  for (const auto& [spec, oracle] : oracles) {
    futures.push_back(std::async(std::launch::async, [&, spec = spec, &oracle = oracle] { return run_oracle(*spec, oracle); }));
  }
  std::size_t failed = 0;
  std::string permanent;
  for (auto& f : futures) {
    auto r = f.get();
    failed += r.failed;
    if (!r.permanent_error.empty() && permanent.empty()) permanent = r.permanent_error;
  }

  // Combined log in config order: oracles, then probe files.
  std::string combined;
  std::size_t lines = 0;
  bool all_complete = true;
  for (const auto& spec : config_.oracles) {
    for (const auto& key : stems) {
      const auto path = trials_dir() / spec.name / (key + ".jsonl");
      const auto counts_key = spec.name + "/" + key;
      if (!manifest_.trial_counts.contains(counts_key) ||
          manifest_.trial_counts[counts_key].value("status", std::string{}) != "complete") {
        all_complete = false;
      }
      if (!fs::exists(path)) continue;
      for (const auto& t : read_trials(path)) {
        combined += trial_to_json(t).dump() + "\n";
        ++lines;
      }
    }
  }
  write_file_atomic(trials_dir() / "trials.jsonl", combined);

  StageOutcome outcome;
  if (!permanent.empty()) {
    manifest_.stages["run"] = {{"status", "aborted"}, {"error", permanent}};
    outcome = {kExitEndpointFailure, false, "run aborted: " + permanent};
  } else if (failed > 0 || !all_complete) {
    manifest_.stages["run"] = {{"status", "partial"}, {"trials", lines}, {"failed", failed}};
    outcome = {failed > 0 ? kExitPartialFailure : kExitOk, false,
               std::to_string(lines) + " trials, " + std::to_string(failed) + " failed"};
  } else {
    manifest_.stages["run"] = {{"status", "complete"}, {"trials", lines}};
    outcome = {kExitOk, false, std::to_string(lines) + " trials"};
  }
  save_manifest();
  return outcome;
}

StageOutcome Pipeline::report() {
  const auto trials_path = trials_dir() / "trials.jsonl";
  if (!fs::exists(trials_path)) throw ConfigError("run '" + run_id_ + "' has no trials yet; run the 'run' stage first");
  const auto digest = file_digest(trials_path);
  if (manifest_.stage_complete("report") && manifest_.stages["report"].value("trials_digest", std::string{}) == digest &&
      fs::exists(run_dir_ / "report.md")) {
    return {kExitOk, true, "report already up to date"};
  }

  const auto cells = aggregate(read_trials(trials_path), config_.alpha);
  ReportLayout layout;
  layout.alpha = config_.alpha;
  for (const auto& o : config_.oracles) layout.models.push_back(o.name);
  ReportSection semantic{"Semantic Dataset", {}};
  ReportSection plain{"Non-semantic Dataset", {}};
  for (const auto& d : config_.datasets) (d.semantic ? semantic : plain).datasets.push_back(d.id);
  if (!semantic.datasets.empty()) layout.sections.push_back(std::move(semantic));
  if (!plain.datasets.empty()) layout.sections.push_back(std::move(plain));
  for (const auto& s : manifest_.skipped) {
    layout.notes.push_back("Skipped " + s["dataset"].get<std::string>() + "/" + s["variant"].get<std::string>() + "/" +
                           s["task"].get<std::string>() + ": " + s["reason"].get<std::string>());
  }

  write_file_atomic(run_dir_ / "report.md", render_report(cells, ReportFormat::Markdown, layout));
  write_file_atomic(run_dir_ / "report.csv", render_report(cells, ReportFormat::Csv, layout));
  write_file_atomic(run_dir_ / "report.json", render_report(cells, ReportFormat::Json, layout));
  manifest_.stages["report"] = {{"status", "complete"}, {"cells", cells.size()}, {"trials_digest", digest}};
  save_manifest();
  return {kExitOk, false, "report with " + std::to_string(cells.size()) + " cells"};
}

StageOutcome Pipeline::all(const std::optional<std::string>& oracle) {
  prepare();
  probe();
  auto ran = run(oracle);
  if (ran.exit_code == kExitEndpointFailure) return ran;
  auto reported = report();
  reported.exit_code = ran.exit_code;
  reported.summary = ran.summary + "; " + reported.summary;
  return reported;
}

}  // namespace tabprobe
