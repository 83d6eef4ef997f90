#include "tabprobe/mock_server.hpp"

#include <chrono>
#include <sstream>
#include <unordered_set>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "tabprobe/error.hpp"

namespace tabprobe {

MockKind parse_mock_kind(std::string_view text) {
  if (text == "uniform_random") return MockKind::UniformRandom;
  if (text == "always_first") return MockKind::AlwaysFirst;
  if (text == "memorizing") return MockKind::Memorizing;
  throw ConfigError("unknown mock oracle '" + std::string(text) + "'");
}

// Rendered-row lookups for the memorizing mock: full rows for existence
// prompts, and (row with one cell shown as "?") -> hidden value for completion.
struct MockServer::TextIndex {
  std::unordered_map<std::string, std::string> masked;  // "" marks an ambiguous key
  std::unordered_set<std::string> rows;

  explicit TextIndex(const ReferenceLibrary* library, const std::vector<std::string>& ids) {
    if (!library) return;
    for (const auto& id : ids) {
      const auto* e = library->find(id);
      if (!e) continue;
      rows.insert(e->rendered_rows.begin(), e->rendered_rows.end());
      for (const auto& row : e->dataset.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
          if (row[j].is_missing()) continue;
          auto key = render_record(row, e->dataset.schema, j);
          auto [it, inserted] = masked.try_emplace(std::move(key), row[j].text());
          if (!inserted && it->second != row[j].text()) it->second.clear();
        }
      }
    }
  }
};

namespace {

std::vector<std::string> option_lines(const std::string& user_text, std::string* record_line) {
  std::vector<std::string> options;
  std::istringstream in(user_text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("Record: ", 0) == 0 && record_line) *record_line = line.substr(8);
    if (line.size() >= 3 && line[0] >= 'A' && line[0] <= 'E' && line[1] == ')' && line[2] == ' ' &&
        static_cast<std::size_t>(line[0] - 'A') == options.size()) {
      options.push_back(line.substr(3));
    }
  }
  return options;
}

}  // namespace

MockServer::MockServer(MockServerOptions options) : options_(std::move(options)) {
  if (options_.kind == MockKind::Memorizing && options_.reference) {
    index_ = std::make_unique<TextIndex>(options_.reference.get(), options_.reference->ids());
  } else {
    index_ = std::make_unique<TextIndex>(nullptr, std::vector<std::string>{});
  }
}

MockServer::~MockServer() { stop(); }

std::string MockServer::answer(const std::string& system_text, const std::string& user_text) const {
  PromptText prompt;
  prompt.system_text = system_text;
  prompt.user_text = user_text;
  switch (options_.kind) {
    case MockKind::AlwaysFirst: return "A";
    case MockKind::UniformRandom: return std::string(1, uniform_letter(options_.seed, prompt));
    case MockKind::Memorizing: {
      std::string record;
      const auto options = option_lines(user_text, &record);
      if (!record.empty()) {
        const auto it = index_->masked.find(record);
        if (it != index_->masked.end() && !it->second.empty()) {
          for (std::size_t i = 0; i < options.size(); ++i) {
            if (options[i] == it->second) return std::string(1, option_letter(i));
          }
        }
      } else {
        for (std::size_t i = 0; i < options.size(); ++i) {
          if (index_->rows.contains(options[i])) return std::string(1, option_letter(i));
        }
      }
      return std::string(1, uniform_letter(options_.seed, prompt));
    }
  }
  return "A";
}

void MockServer::start() {
  if (server_) return;
  server_ = std::make_unique<httplib::Server>();
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const auto n = ++requests_;
    if (!options_.api_key.empty() && req.get_header_value("Authorization") != "Bearer " + options_.api_key) {
      res.status = 401;
      res.set_content(R"({"error":{"message":"invalid api key"}})", "application/json");
      return;
    }
    if (static_cast<int>(n) <= options_.fail_first) {
      res.status = options_.fail_status;
      res.set_content(R"({"error":{"message":"injected failure"}})", "application/json");
      return;
    }
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array()) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"malformed request"}})", "application/json");
      return;
    }
    if (options_.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(options_.delay_ms));
    std::string system_text;
    std::string user_text;
    for (const auto& m : body["messages"]) {
      const auto role = m.value("role", std::string{});
      const auto content = m.value("content", std::string{});
      if (role == "system") system_text = content;
      if (role == "user") user_text = content;
    }
    nlohmann::ordered_json out;
    out["id"] = "mock-" + std::to_string(n);
    out["object"] = "chat.completion";
    out["model"] = body.value("model", std::string{"mock"});
    out["choices"] = nlohmann::ordered_json::array(
        {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", answer(system_text, user_text)}}},
          {"finish_reason", "stop"}}});
    res.set_content(out.dump(), "application/json");
  });
  server_->Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"requests", requests_.load()}}.dump(), "application/json");
  });

  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) {
    server_.reset();
    throw Error("mock server: cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockServer::stop() {
  if (!server_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
}

std::string MockServer::base_url() const { return "http://" + options_.host + ":" + std::to_string(port_); }

}  // namespace tabprobe
