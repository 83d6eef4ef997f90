#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "tabprobe/error.hpp"
#include "tabprobe/log.hpp"
#include "tabprobe/mock_server.hpp"
#include "tabprobe/pipeline.hpp"

using namespace tabprobe;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

struct StageArgs {
  std::string config;
  std::string run_id;
  std::string oracle;
  bool resume = false;
};

void add_stage_flags(CLI::App* cmd, StageArgs& args, bool with_oracle) {
  cmd->add_option("--config", args.config, "Audit config (JSON)")->required();
  cmd->add_option("--run-id", args.run_id, "Run directory name under out_dir");
  cmd->add_flag("--resume", args.resume, "Continue the most recent run made from this config");
  if (with_oracle) cmd->add_option("--oracle", args.oracle, "Only run this configured oracle");
}

Pipeline open_pipeline(const StageArgs& args, bool create) {
  auto config = RunConfig::load(args.config);
  std::string id = args.run_id;
  if (id.empty() && args.resume) {
    auto latest = Pipeline::latest_run_id(config);
    if (!latest) throw ConfigError("--resume: no earlier run of this config under " + config.out_dir.string());
    id = *latest;
  }
  if (id.empty()) {
    if (!create) throw ConfigError("--run-id or --resume is required for this stage");
    id = Pipeline::new_run_id(config);
  }
  return Pipeline(std::move(config), id);
}

int report_outcome(const Pipeline& p, const std::string& stage, const StageOutcome& o) {
  std::cout << stage << " [" << p.run_dir().filename().string() << "]: " << o.summary << "\n";
  return o.exit_code;
}

int serve(const MockServerOptions& base, const std::string& port_file, const std::string& key_env,
          const std::vector<std::string>& references) {
  auto options = base;
  if (!key_env.empty()) {
    const char* key = std::getenv(key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + key_env + " is not set");
    options.api_key = key;
  }
  if (!references.empty()) {
    auto lib = std::make_shared<ReferenceLibrary>();
    for (const auto& spec : references) {
      // id=path, or a bare path whose stem is the dataset id
      const auto eq = spec.find('=');
      const std::filesystem::path path = eq == std::string::npos ? spec : spec.substr(eq + 1);
      const auto id = eq == std::string::npos ? path.stem().string() : spec.substr(0, eq);
      lib->add(load_csv(path, {}, id));
    }
    options.reference = lib;
  }
  MockServer server(options);
  server.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  if (!port_file.empty()) write_file_atomic(port_file, std::to_string(server.port()) + "\n");
  std::cout << "listening on " << server.base_url() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe language models for memorized tabular datasets"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  StageArgs prepare_args, probe_args, run_args, report_args, all_args;
  auto* prepare_cmd = app.add_subcommand("prepare", "Load datasets and write the requested variants");
  add_stage_flags(prepare_cmd, prepare_args, false);
  auto* probe_cmd = app.add_subcommand("probe", "Generate completion and existence probes");
  add_stage_flags(probe_cmd, probe_args, false);
  auto* run_cmd = app.add_subcommand("run", "Query the oracles");
  add_stage_flags(run_cmd, run_args, true);
  auto* report_cmd = app.add_subcommand("report", "Aggregate trials and write report.md/csv/json");
  add_stage_flags(report_cmd, report_args, false);
  auto* all_cmd = app.add_subcommand("all", "prepare, probe, run and report");
  add_stage_flags(all_cmd, all_args, true);

  MockServerOptions mock;
  std::string mock_kind = "uniform_random", port_file, key_env;
  std::vector<std::string> references;
  auto* mock_cmd = app.add_subcommand("mock-serve", "Serve a mock oracle over an OpenAI-compatible endpoint");
  mock_cmd->add_option("--oracle", mock_kind, "uniform_random | always_first | memorizing");
  mock_cmd->add_option("--seed", mock.seed);
  mock_cmd->add_option("--host", mock.host);
  mock_cmd->add_option("--port", mock.port, "0 picks a free port");
  mock_cmd->add_option("--port-file", port_file, "Write the bound port here once listening");
  mock_cmd->add_option("--fail-first", mock.fail_first, "Answer the first N requests with --fail-status");
  mock_cmd->add_option("--fail-status", mock.fail_status);
  mock_cmd->add_option("--delay-ms", mock.delay_ms, "Sleep this long before each answer");
  mock_cmd->add_option("--api-key-env", key_env, "Require this bearer token");
  mock_cmd->add_option("--reference", references, "CSV(s) the memorizing mock recalls, as id=path or path");

  CLI11_PARSE(app, argc, argv);
  set_log_level(verbose ? LogLevel::Debug : LogLevel::Info);

  try {
    if (*prepare_cmd) {
      auto p = open_pipeline(prepare_args, true);
      return report_outcome(p, "prepare", p.prepare());
    }
    if (*probe_cmd) {
      auto p = open_pipeline(probe_args, false);
      return report_outcome(p, "probe", p.probe());
    }
    if (*run_cmd) {
      auto p = open_pipeline(run_args, false);
      std::optional<std::string> only;
      if (!run_args.oracle.empty()) only = run_args.oracle;
      return report_outcome(p, "run", p.run(only));
    }
    if (*report_cmd) {
      auto p = open_pipeline(report_args, false);
      return report_outcome(p, "report", p.report());
    }
    if (*all_cmd) {
      auto p = open_pipeline(all_args, true);
      std::optional<std::string> only;
      if (!all_args.oracle.empty()) only = all_args.oracle;
      return report_outcome(p, "all", p.all(only));
    }
    if (*mock_cmd) {
      mock.kind = parse_mock_kind(mock_kind);
      return serve(mock, port_file, key_env, references);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const PermanentFailure& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return kExitEndpointFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
