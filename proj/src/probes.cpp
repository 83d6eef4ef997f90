#include "tabprobe/probes.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tabprobe/error.hpp"
#include "tabprobe/kernels.hpp"

namespace tabprobe {

std::string_view to_string(Task task) { return task == Task::Completion ? "completion" : "existence"; }

std::string_view metric_code(Task task) { return task == Task::Completion ? "AC" : "AE"; }

Task parse_task(std::string_view text) {
  if (text == "completion" || text == "AC") return Task::Completion;
  if (text == "existence" || text == "AE") return Task::Existence;
  throw ConfigError("unknown task '" + std::string(text) + "'");
}

std::size_t attributes_per_record(std::size_t columns) noexcept {
  // round(columns / 5); a fractional part of exactly .5 cannot occur.
  return std::max<std::size_t>(1, (columns + 2) / 5);
}

const std::string& probe_id(const Probe& probe) {
  return std::visit([](const auto& p) -> const std::string& { return p.probe_id; }, probe);
}

std::size_t truth_index(const Probe& probe) {
  return std::visit([](const auto& p) { return p.truth_index; }, probe);
}

std::size_t row_index(const Probe& probe) {
  return std::visit([](const auto& p) { return p.row_index; }, probe);
}

namespace {

std::vector<std::size_t> sample_rows(Rng& rng, std::size_t rows, std::size_t n) {
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(rows - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

std::string make_probe_id(const Dataset& ds, Task task, std::size_t row, const ColumnSpec* column) {
  std::string id = ds.source_id + ":" + std::string(to_string(ds.variant)) + ":" + std::string(metric_code(task)) +
                   ":" + std::to_string(row);
  if (column) id += ":" + std::to_string(column->position);
  return id;
}

void check_request(const Dataset& ds, std::size_t n_records) {
  if (n_records == 0) throw ConfigError("n_records must be positive");
  if (n_records > ds.row_count()) {
    throw ConfigError("n_records=" + std::to_string(n_records) + " exceeds the " + std::to_string(ds.row_count()) +
                      " rows of '" + ds.source_id + "'");
  }
}

}  // namespace

ProbeSet gen_completion(const Dataset& ds, const FeaturePool& pool, std::size_t n_records, std::uint64_t seed) {
  if (pool.empty()) {
    throw DataError("dataset '" + ds.source_id + "' has an empty feature pool and cannot support 5-way probes");
  }
  check_request(ds, n_records);

  ProbeSet set;
  set.task = Task::Completion;
  set.dataset_id = ds.source_id;
  set.variant = ds.variant;
  set.schema = ds.schema;
  set.config.n_records = n_records;
  set.config.seed = seed;

  std::size_t m = attributes_per_record(ds.column_count());
  if (m > pool.size()) {
    set.config.warnings.push_back("requested " + std::to_string(m) + " masked attributes per record but the pool holds " +
                                  std::to_string(pool.size()) + "; clamped");
    m = pool.size();
  }
  set.config.per_record = m;

  std::vector<Marginal> marginals(ds.column_count());
  for (const auto* group : {&pool.categorical_top, &pool.numerical_top}) {
    for (const auto& col : *group) marginals[col.position] = marginal(ds, col);
  }

  Rng rng(derive_seed(seed, "completion"));
  std::size_t short_rows = 0;
  for (const auto row : sample_rows(rng, ds.row_count(), n_records)) {
    const auto& record = ds.rows[row];
    std::vector<ColumnSpec> cats;
    std::vector<ColumnSpec> nums;
    for (const auto& c : pool.categorical_top) {
      if (!record[c.position].is_missing()) cats.push_back(c);
    }
    for (const auto& c : pool.numerical_top) {
      if (!record[c.position].is_missing()) nums.push_back(c);
    }

    std::vector<ColumnSpec> picks;
    bool want_categorical = rng.below(2) == 0;
    while (picks.size() < m && (!cats.empty() || !nums.empty())) {
      auto* from = want_categorical ? &cats : &nums;
      if (from->empty()) from = want_categorical ? &nums : &cats;
      const auto k = static_cast<std::size_t>(rng.below(from->size()));
      picks.push_back((*from)[k]);
      from->erase(from->begin() + static_cast<std::ptrdiff_t>(k));
      want_categorical = !want_categorical;
    }
    if (picks.size() < m) ++short_rows;

    for (const auto& col : picks) {
      CompletionProbe probe;
      probe.probe_id = make_probe_id(ds, Task::Completion, row, &col);
      probe.row_index = row;
      probe.masked_column = col;
      probe.visible_record = record;
      probe.visible_record[col.position] = CellValue::missing();

      const CellValue truth = record[col.position];
      std::array<CellValue, kOptionCount> options;
      options[0] = truth;
      for (std::size_t i = 1; i < kOptionCount; ++i) {
        options[i] = sample_marginal(marginals[col.position], rng, std::span<const CellValue>(options.data(), i));
      }
      rng.shuffle(std::span<CellValue>(options));
      probe.truth_index = static_cast<std::size_t>(std::find(options.begin(), options.end(), truth) - options.begin());
      probe.candidates = std::move(options);
      set.probes.emplace_back(std::move(probe));
    }
  }
  if (short_rows > 0) {
    set.config.warnings.push_back(std::to_string(short_rows) + " records had fewer than " + std::to_string(m) +
                                  " non-missing pooled attributes");
  }
  return set;
}

ProbeSet gen_existence(const Dataset& ds, std::size_t n_records, std::uint64_t seed) {
  check_request(ds, n_records);
  const std::size_t p = attributes_per_record(ds.column_count());
  const auto marginals = kernels::column_marginals(ds);
  std::vector<std::size_t> perturbable;
  for (std::size_t j = 0; j < marginals.size(); ++j) {
    if (marginals[j].distinct() >= 2) perturbable.push_back(j);
  }
  if (perturbable.size() < p) {
    throw DataError("dataset '" + ds.source_id + "' has " + std::to_string(perturbable.size()) +
                    " columns with at least 2 distinct values; existence probes need " + std::to_string(p));
  }

  ProbeSet set;
  set.task = Task::Existence;
  set.dataset_id = ds.source_id;
  set.variant = ds.variant;
  set.schema = ds.schema;
  set.config.n_records = n_records;
  set.config.seed = seed;
  set.config.per_record = p;

  constexpr int kMaxAttempts = 100;
  Rng rng(derive_seed(seed, "existence"));
  for (const auto row : sample_rows(rng, ds.row_count(), n_records)) {
    const Record& genuine = ds.rows[row];
    std::vector<Record> versions{genuine};
    std::vector<std::vector<std::string>> perturbed{{}};

    for (std::size_t copy = 1; copy < kOptionCount; ++copy) {
      bool accepted = false;
      for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
        auto cols = perturbable;
        for (std::size_t i = 0; i < p; ++i) {
          const auto j = i + static_cast<std::size_t>(rng.below(cols.size() - i));
          std::swap(cols[i], cols[j]);
        }
        cols.resize(p);
        std::sort(cols.begin(), cols.end());

        Record fake = genuine;
        std::vector<std::string> names;
        for (const auto c : cols) {
          fake[c] = sample_marginal(marginals[c], rng, std::span<const CellValue>(&genuine[c], 1));
          names.push_back(ds.schema[c].name);
        }
        if (std::find(versions.begin(), versions.end(), fake) == versions.end()) {
          versions.push_back(std::move(fake));
          perturbed.push_back(std::move(names));
          accepted = true;
        }
      }
      if (!accepted) {
        throw DataError("cannot produce 4 distinct perturbed versions of row " + std::to_string(row) + " in '" +
                        ds.source_id + "'");
      }
    }

    std::array<std::size_t, kOptionCount> order{0, 1, 2, 3, 4};
    rng.shuffle(std::span<std::size_t>(order));
    ExistenceProbe probe;
    probe.probe_id = make_probe_id(ds, Task::Existence, row, nullptr);
    probe.row_index = row;
    for (std::size_t slot = 0; slot < kOptionCount; ++slot) {
      probe.versions[slot] = versions[order[slot]];
      probe.perturbed_columns[slot] = perturbed[order[slot]];
      if (order[slot] == 0) probe.truth_index = slot;
    }
    set.probes.emplace_back(std::move(probe));
  }
  return set;
}

namespace {

nlohmann::ordered_json record_to_json(const Record& rec) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& c : rec) out.push_back(nlohmann::ordered_json(cell_to_json(c)));
  return out;
}

Record record_from_json(const nlohmann::json& arr, const std::vector<ColumnSpec>& schema) {
  if (!arr.is_array() || arr.size() != schema.size()) throw DataError("probe record does not match the schema width");
  Record rec;
  for (std::size_t j = 0; j < schema.size(); ++j) rec.push_back(cell_from_json(arr[j], schema[j].kind));
  return rec;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::ordered_json answer_to_json(const Probe& probe) {
  nlohmann::ordered_json a;
  a["probe_id"] = probe_id(probe);
  a["truth_index"] = truth_index(probe);
  if (const auto* e = std::get_if<ExistenceProbe>(&probe)) a["perturbed"] = e->perturbed_columns;
  return a;
}

}  // namespace

nlohmann::ordered_json probe_to_json(const ProbeSet& set, const Probe& probe) {
  nlohmann::ordered_json j;
  j["probe_id"] = probe_id(probe);
  j["task"] = std::string(to_string(set.task));
  j["dataset"] = set.dataset_id;
  j["variant"] = std::string(to_string(set.variant));
  j["row_index"] = row_index(probe);
  nlohmann::ordered_json payload;
  if (const auto* c = std::get_if<CompletionProbe>(&probe)) {
    payload["masked_column"] = c->masked_column.name;
    payload["masked_position"] = c->masked_column.position;
    payload["record"] = record_to_json(c->visible_record);
    payload["candidates"] = nlohmann::ordered_json::array();
    for (const auto& v : c->candidates) payload["candidates"].push_back(nlohmann::ordered_json(cell_to_json(v)));
  } else {
    const auto& e = std::get<ExistenceProbe>(probe);
    payload["versions"] = nlohmann::ordered_json::array();
    for (const auto& v : e.versions) payload["versions"].push_back(record_to_json(v));
  }
  j["payload"] = std::move(payload);
  return j;
}

nlohmann::ordered_json probe_set_meta(const ProbeSet& set) {
  nlohmann::ordered_json meta;
  meta["task"] = std::string(to_string(set.task));
  meta["dataset"] = set.dataset_id;
  meta["variant"] = std::string(to_string(set.variant));
  meta["seed"] = set.config.seed;
  meta["n_records"] = set.config.n_records;
  meta["per_record"] = set.config.per_record;
  meta["template_version"] = set.config.template_version;
  meta["option_count"] = kOptionCount;
  meta["probe_count"] = set.probes.size();
  meta["warnings"] = set.config.warnings;
  meta["schema"] = nlohmann::ordered_json::array();
  for (const auto& c : set.schema) {
    meta["schema"].push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}});
  }
  return meta;
}

ProbeFiles ProbeFiles::for_stem(const std::filesystem::path& dir, const std::string& stem) {
  return {dir / (stem + ".probes.jsonl"), dir / (stem + ".answers.jsonl"), dir / (stem + ".meta.json")};
}

namespace {

struct SerializedSet {
  std::string probes;
  std::string answers;
  std::string meta;
};

SerializedSet serialize(const ProbeSet& set) {
  SerializedSet s;
  for (const auto& p : set.probes) {
    s.probes += probe_to_json(set, p).dump() + "\n";
    s.answers += answer_to_json(p).dump() + "\n";
  }
  s.meta = probe_set_meta(set).dump(2) + "\n";
  return s;
}

}  // namespace

std::string serialize_probe_set(const ProbeSet& set) {
  const auto s = serialize(set);
  return s.meta + s.probes + s.answers;
}

void write_probe_set(const ProbeSet& set, const ProbeFiles& files) {
  const auto s = serialize(set);
  write_file_atomic(files.probes, s.probes);
  write_file_atomic(files.answers, s.answers);
  write_file_atomic(files.meta, s.meta);
}

ProbeSet read_probe_set(const ProbeFiles& files) {
  const auto meta = nlohmann::json::parse(read_file(files.meta));
  ProbeSet set;
  set.task = parse_task(meta.at("task").get<std::string>());
  set.dataset_id = meta.at("dataset").get<std::string>();
  set.variant = parse_variant(meta.at("variant").get<std::string>());
  set.config.seed = meta.at("seed").get<std::uint64_t>();
  set.config.n_records = meta.at("n_records").get<std::size_t>();
  set.config.per_record = meta.at("per_record").get<std::size_t>();
  set.config.template_version = meta.at("template_version").get<std::string>();
  set.config.warnings = meta.at("warnings").get<std::vector<std::string>>();
  std::size_t pos = 0;
  for (const auto& c : meta.at("schema")) {
    set.schema.push_back({c.at("name").get<std::string>(), parse_column_kind(c.at("kind").get<std::string>()), pos++});
  }

  const auto probes = read_jsonl(files.probes);
  const auto answers = read_jsonl(files.answers);
  if (probes.size() != answers.size()) throw DataError("probe and answer files differ in length: " + files.probes.string());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& j = probes[i];
    const auto& a = answers[i];
    const auto id = j.at("probe_id").get<std::string>();
    if (a.at("probe_id").get<std::string>() != id) throw DataError("answer file out of order at probe '" + id + "'");
    const auto& payload = j.at("payload");
    if (set.task == Task::Completion) {
      CompletionProbe p;
      p.probe_id = id;
      p.row_index = j.at("row_index").get<std::size_t>();
      const auto position = payload.at("masked_position").get<std::size_t>();
      if (position >= set.schema.size()) throw DataError("probe '" + id + "' masks an unknown column");
      p.masked_column = set.schema[position];
      p.visible_record = record_from_json(payload.at("record"), set.schema);
      const auto& cands = payload.at("candidates");
      if (cands.size() != kOptionCount) throw DataError("probe '" + id + "' must have 5 candidates");
      for (std::size_t k = 0; k < kOptionCount; ++k) p.candidates[k] = cell_from_json(cands[k], p.masked_column.kind);
      p.truth_index = a.at("truth_index").get<std::size_t>();
      set.probes.emplace_back(std::move(p));
    } else {
      ExistenceProbe p;
      p.probe_id = id;
      p.row_index = j.at("row_index").get<std::size_t>();
      const auto& versions = payload.at("versions");
      if (versions.size() != kOptionCount) throw DataError("probe '" + id + "' must have 5 versions");
      for (std::size_t k = 0; k < kOptionCount; ++k) p.versions[k] = record_from_json(versions[k], set.schema);
      p.truth_index = a.at("truth_index").get<std::size_t>();
      const auto& perturbed = a.at("perturbed");
      for (std::size_t k = 0; k < kOptionCount; ++k) p.perturbed_columns[k] = perturbed.at(k).get<std::vector<std::string>>();
      set.probes.emplace_back(std::move(p));
    }
    if (truth_index(set.probes.back()) >= kOptionCount) throw DataError("probe '" + id + "' has an out-of-range truth index");
  }
  return set;
}

}  // namespace tabprobe
