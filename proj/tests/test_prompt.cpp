#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "tabprobe/error.hpp"
#include "tabprobe/prompt.hpp"
#include "tabprobe/variants.hpp"

using namespace tabprobe;

namespace {

const std::vector<ColumnSpec> kSchema{{"age", ColumnKind::Numerical, 0}, {"workclass", ColumnKind::Categorical, 1}};

ProbeSet completion_set() {
  ProbeSet set;
  set.task = Task::Completion;
  set.dataset_id = "adult";
  set.schema = kSchema;
  CompletionProbe p;
  p.probe_id = "adult:real:AC:0:1";
  p.masked_column = kSchema[1];
  p.visible_record = {CellValue::numerical(39), CellValue::missing()};
  p.candidates = {CellValue::categorical("State-gov"), CellValue::categorical("Private"),
                  CellValue::categorical("Local-gov"), CellValue::categorical("Self-emp-inc"),
                  CellValue::categorical("Federal-gov")};
  p.truth_index = 0;
  set.probes.emplace_back(p);
  return set;
}

ProbeSet existence_set() {
  ProbeSet set;
  set.task = Task::Existence;
  set.dataset_id = "adult";
  set.schema = kSchema;
  ExistenceProbe p;
  p.probe_id = "adult:real:AE:0";
  p.versions = {Record{CellValue::numerical(39), CellValue::categorical("Private")},
                Record{CellValue::numerical(39), CellValue::categorical("State-gov")},
                Record{CellValue::numerical(52.5), CellValue::categorical("State-gov")},
                Record{CellValue::numerical(41), CellValue::missing()},
                Record{CellValue::numerical(39), CellValue::categorical("Federal-gov")}};
  p.truth_index = 1;
  set.probes.emplace_back(p);
  return set;
}

std::string golden_text(const PromptText& p) {
  return "fingerprint: " + prompt_fingerprint(p) + "\n--- system\n" + p.system_text + "\n--- user\n" + p.user_text + "\n";
}

void check_golden(const std::string& name, const std::string& actual) {
  const std::filesystem::path path = std::filesystem::path(TABPROBE_GOLDEN_DIR) / name;
  if (std::getenv("TABPROBE_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << actual;
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file " << path);
  CHECK(read_file(path) == actual);
}

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
  std::size_t n = 0, pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const auto line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    n += line.rfind(prefix, 0) == 0;
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return n;
}

}  // namespace

TEST_CASE("record rendering") {
  const Record r{CellValue::numerical(39), CellValue::categorical("Private")};
  CHECK(render_record(r, kSchema) == "age = 39; workclass = Private");
  CHECK(render_record(r, kSchema, 1) == "age = 39; workclass = ?");
  const Record missing{CellValue::numerical(0.5), CellValue::missing()};
  CHECK(render_record(missing, kSchema) == "age = 0.5; workclass = NA");
}

TEST_CASE("obfuscated record rendering") {
  const auto ds = parse_csv("age,workclass\n39,Private\n50,Self-emp\n", {}, "adult");
  const auto [obf, map] = make_obfuscated(ds);
  CHECK(render_record(obf.rows[0], obf.schema) == "f01 = 39; f02 = c01");
}

TEST_CASE("completion prompt layout") {
  const auto set = completion_set();
  const auto p = render_prompt(set.probes[0], set);
  CHECK(p.option_count == 5);
  CHECK(count_lines_starting(p.user_text, "A) ") == 1);
  std::size_t options = 0;
  for (char l : std::string("ABCDE")) options += count_lines_starting(p.user_text, std::string(1, l) + ") ");
  CHECK(options == 5);
  CHECK(p.user_text.find("Record: age = 39; workclass = ?") != std::string::npos);
  CHECK(p.user_text.find("Answer with a single letter A–E and nothing else.") != std::string::npos);
  CHECK(p.user_text.find("\"adult\"") != std::string::npos);
  CHECK(p.option_texts == std::vector<std::string>{"State-gov", "Private", "Local-gov", "Self-emp-inc", "Federal-gov"});
  check_golden("completion_v1.txt", golden_text(p));
}

TEST_CASE("existence prompt layout") {
  const auto set = existence_set();
  const auto p = render_prompt(set.probes[0], set);
  std::size_t blocks = 0;
  for (char l : std::string("ABCDE")) blocks += count_lines_starting(p.user_text, std::string(1, l) + ") age = ");
  CHECK(blocks == 5);
  CHECK(p.user_text.find("genuine record") != std::string::npos);
  check_golden("existence_v1.txt", golden_text(p));
}

TEST_CASE("blinded prompts omit the dataset name") {
  const auto set = completion_set();
  const auto p = render_prompt(set.probes[0], set, PromptOptions{false, std::string(kTemplateVersion)});
  CHECK(p.user_text.find("adult") == std::string::npos);
  CHECK(p.user_text.find("a tabular dataset") != std::string::npos);
  check_golden("completion_v1_blind.txt", golden_text(p));
}

TEST_CASE("template version is part of the fingerprint") {
  const auto set = completion_set();
  auto p = render_prompt(set.probes[0], set);
  const auto v1 = prompt_fingerprint(p);
  CHECK(v1 == prompt_fingerprint(render_prompt(set.probes[0], set)));
  p.template_version = "v2";
  CHECK(prompt_fingerprint(p) != v1);
  CHECK_THROWS_AS(render_prompt(set.probes[0], set, PromptOptions{true, "v2"}), ConfigError);
}
