#include "tabprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "tabprobe/error.hpp"
#include "tabprobe/kernels.hpp"

namespace tabprobe {

namespace {

int variant_rank(Variant v) { return static_cast<int>(v); }

std::string format_p(double p) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), p);
  return std::string(buf, r.ptr);
}

}  // namespace

std::vector<AggregateCell> aggregate(const std::vector<TrialRecord>& trials, double alpha) {
  using Key = std::tuple<std::string, int, int, std::string>;
  std::map<Key, AggregateCell> groups;
  for (const auto& t : trials) {
    if (t.option_count != kOptionCount) {
      throw DataError("trial '" + t.probe_id + "' has " + std::to_string(t.option_count) +
                      " options; only 5-option probes can be scored against the 0.2 baseline");
    }
    Key key{t.dataset_id, variant_rank(t.variant), static_cast<int>(t.task), t.model_name};
    auto [it, inserted] = groups.try_emplace(std::move(key));
    auto& cell = it->second;
    if (inserted) {
      cell.dataset_id = t.dataset_id;
      cell.variant = t.variant;
      cell.task = t.task;
      cell.model_name = t.model_name;
      cell.p0 = 1.0 / static_cast<double>(kOptionCount);
    }
    ++cell.n;
    if (t.correct && t.status == TrialStatus::Answered) ++cell.correct_count;
  }

  std::vector<AggregateCell> cells;
  std::vector<kernels::TailQuery> queries;
  for (auto& [key, cell] : groups) {
    cell.accuracy = static_cast<double>(cell.correct_count) / static_cast<double>(cell.n);
    queries.push_back({cell.n, cell.correct_count, cell.p0});
    cells.push_back(std::move(cell));
  }
  const auto tails = kernels::binomial_tails(queries);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cells[i].p_value = tails[i];
    cells[i].significant = tails[i] < alpha;
  }
  return cells;
}

std::string format_accuracy(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", accuracy);
  return buf;
}

nlohmann::ordered_json cell_to_json(const AggregateCell& c) {
  nlohmann::ordered_json j;
  j["dataset"] = c.dataset_id;
  j["variant"] = std::string(to_string(c.variant));
  j["task"] = std::string(metric_code(c.task));
  j["model"] = c.model_name;
  j["n"] = c.n;
  j["correct"] = c.correct_count;
  j["accuracy"] = c.accuracy;
  j["p_value"] = c.p_value;
  j["p0"] = c.p0;
  j["significant"] = c.significant;
  return j;
}

AggregateCell aggregate_cell_from_json(const nlohmann::json& j) {
  AggregateCell c;
  c.dataset_id = j.at("dataset").get<std::string>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.task = parse_task(j.at("task").get<std::string>());
  c.model_name = j.at("model").get<std::string>();
  c.n = j.at("n").get<std::uint64_t>();
  c.correct_count = j.at("correct").get<std::uint64_t>();
  c.accuracy = j.at("accuracy").get<double>();
  c.p_value = j.at("p_value").get<double>();
  c.p0 = j.at("p0").get<double>();
  c.significant = j.at("significant").get<bool>();
  return c;
}

std::vector<AggregateCell> cells_from_json(const nlohmann::json& doc) {
  std::vector<AggregateCell> cells;
  for (const auto& j : doc.at("cells")) cells.push_back(aggregate_cell_from_json(j));
  return cells;
}

namespace {

std::string render_csv(const std::vector<AggregateCell>& cells) {
  std::string out = "dataset,variant,task,model,n,correct,accuracy,p_value,p0,significant\n";
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  for (const auto& c : cells) {
    out += quote(c.dataset_id) + "," + std::string(to_string(c.variant)) + "," + std::string(metric_code(c.task)) + "," +
           quote(c.model_name) + "," + std::to_string(c.n) + "," + std::to_string(c.correct_count) + "," +
           format_p(c.accuracy) + "," + format_p(c.p_value) + "," + format_p(c.p0) + "," +
           (c.significant ? "true" : "false") + "\n";
  }
  return out;
}

std::string render_json(const std::vector<AggregateCell>& cells) {
  nlohmann::ordered_json doc;
  doc["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : cells) doc["cells"].push_back(cell_to_json(c));
  return doc.dump(2) + "\n";
}

std::string render_markdown(const std::vector<AggregateCell>& cells, const ReportLayout& layout) {
  std::vector<std::string> models = layout.models;
  {
    std::set<std::string> extra;
    for (const auto& c : cells) {
      if (std::find(models.begin(), models.end(), c.model_name) == models.end()) extra.insert(c.model_name);
    }
    models.insert(models.end(), extra.begin(), extra.end());
  }

  std::map<std::tuple<std::string, int, int, std::string>, const AggregateCell*> index;
  std::vector<std::string> cell_datasets;
  for (const auto& c : cells) {
    index[{c.dataset_id, variant_rank(c.variant), static_cast<int>(c.task), c.model_name}] = &c;
    if (std::find(cell_datasets.begin(), cell_datasets.end(), c.dataset_id) == cell_datasets.end()) {
      cell_datasets.push_back(c.dataset_id);
    }
  }

  std::vector<ReportSection> sections = layout.sections;
  if (sections.empty()) sections.push_back({"", cell_datasets});

  const std::size_t width = 3 + models.size();
  auto row = [&](const std::vector<std::string>& fields) {
    std::string line = "|";
    for (std::size_t i = 0; i < width; ++i) line += " " + (i < fields.size() ? fields[i] : std::string()) + " |";
    return line + "\n";
  };

  std::string out;
  std::vector<std::string> header{"Dataset", "Variant", "Metric"};
  for (const auto& m : models) header.push_back("`" + m + "`");
  out += row(header);
  std::string rule = "|";
  for (std::size_t i = 0; i < width; ++i) rule += i < 3 ? " --- |" : " :---: |";
  out += rule + "\n";

  for (const auto& section : sections) {
    if (!section.title.empty()) out += row({"**" + section.title + "**"});
    for (const auto& ds : section.datasets) {
      bool first_ds_row = true;
      for (Variant v : {Variant::Real, Variant::Like, Variant::Obf}) {
        bool present = false;
        for (const auto& m : models) {
          for (Task t : {Task::Completion, Task::Existence}) present |= index.contains({ds, variant_rank(v), static_cast<int>(t), m});
        }
        if (!present) continue;
        bool first_variant_row = true;
        for (Task t : {Task::Completion, Task::Existence}) {
          std::vector<std::string> fields{first_ds_row ? "**" + ds + "**" : "",
                                          first_variant_row ? "**" + std::string(to_string(v)) + "**" : "",
                                          "**" + std::string(metric_code(t)) + "**"};
          for (const auto& m : models) {
            const auto it = index.find({ds, variant_rank(v), static_cast<int>(t), m});
            if (it == index.end()) {
              fields.push_back("–");
            } else {
              const auto acc = format_accuracy(it->second->accuracy);
              fields.push_back(it->second->significant ? "**" + acc + "**" : acc);
            }
          }
          out += row(fields);
          first_ds_row = false;
          first_variant_row = false;
        }
      }
    }
  }
  out += "\nAC: completion accuracy. AE: existence accuracy. Bold: significantly above the 0.2 random-guess "
         "baseline (one-sided exact binomial test, alpha = " + format_p(layout.alpha) + ").\n";
  for (const auto& note : layout.notes) out += "\n- " + note;
  if (!layout.notes.empty()) out += "\n";
  return out;
}

}  // namespace

std::string render_report(const std::vector<AggregateCell>& cells, ReportFormat format, const ReportLayout& layout) {
  switch (format) {
    case ReportFormat::Markdown: return render_markdown(cells, layout);
    case ReportFormat::Csv: return render_csv(cells);
    case ReportFormat::Json: return render_json(cells);
  }
  return {};
}

}  // namespace tabprobe
