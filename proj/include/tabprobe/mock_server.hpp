#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "tabprobe/oracle.hpp"

namespace httplib {
class Server;
}

namespace tabprobe {

enum class MockKind { UniformRandom, AlwaysFirst, Memorizing };

MockKind parse_mock_kind(std::string_view text);

struct MockServerOptions {
  MockKind kind = MockKind::UniformRandom;
  std::uint64_t seed = 0;
  std::string host = "127.0.0.1";
  int port = 0;  // 0 binds any free port
  /// The first `fail_first` requests are answered with `fail_status`.
  int fail_first = 0;
  int fail_status = 503;
  /// Added latency per answered request.
  int delay_ms = 0;
  /// Bearer token the server requires; empty accepts any request.
  std::string api_key;
  /// Datasets the memorizing mock recalls. Matching works on prompt text only.
  std::shared_ptr<const ReferenceLibrary> reference;
};

/// Local OpenAI-compatible endpoint (POST /v1/chat/completions) answering
/// from a mock oracle, for integration tests of the real HTTP path.
/// GET /stats returns {"requests": n}.
class MockServer {
 public:
  explicit MockServer(MockServerOptions options);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds and starts serving on a background thread. Throws Error on bind failure.
  void start();
  void stop();
  int port() const noexcept { return port_; }
  std::string base_url() const;
  std::size_t request_count() const noexcept { return requests_.load(); }

  /// Answer text for a chat request (exposed for tests).
  std::string answer(const std::string& system_text, const std::string& user_text) const;

 private:
  struct TextIndex;

  MockServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<TextIndex> index_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace tabprobe
