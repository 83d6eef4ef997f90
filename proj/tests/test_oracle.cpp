#include <cstdlib>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tabprobe/error.hpp"
#include "tabprobe/marginal.hpp"
#include "tabprobe/mock_server.hpp"
#include "tabprobe/oracle.hpp"
#include "tabprobe/runner.hpp"
#include "tabprobe/variants.hpp"

using namespace tabprobe;

namespace {

double accuracy(const std::vector<TrialRecord>& trials) {
  double c = 0;
  for (const auto& t : trials) c += t.correct;
  return c / static_cast<double>(trials.size());
}

PromptText simple_prompt() {
  PromptText p;
  p.system_text = "s";
  p.user_text = "Which? A) x B) y";
  return p;
}

EndpointConfig fast_endpoint(const MockServer& server) {
  EndpointConfig e;
  e.base_url = server.base_url();
  e.model_name = "mock";
  e.max_retries = 3;
  e.backoff_base_ms = 1;
  e.backoff_max_ms = 4;
  e.timeout_ms = 5000;
  return e;
}

}  // namespace

TEST_CASE("uniform oracle sits near chance") {
  const auto ds = fixtures::adult_like(3000, 40);
  const auto set = gen_existence(ds, 1000, 3);
  RunOptions opt;
  opt.model_name = "u";
  const auto trials = run_probe_set(UniformRandomOracle{7}, set, opt);
  REQUIRE(trials.size() == 1000);
  const double acc = accuracy(trials);
  CHECK(acc >= 0.12);
  CHECK(acc <= 0.28);
}

TEST_CASE("uniform oracle is deterministic per prompt and seed") {
  const auto p = simple_prompt();
  CHECK(uniform_letter(3, p) == uniform_letter(3, p));
  std::set<char> seen;
  for (std::uint64_t s = 0; s < 200; ++s) seen.insert(uniform_letter(s, p));
  CHECK(seen == std::set<char>{'A', 'B', 'C', 'D', 'E'});
}

TEST_CASE("memorizing oracle recalls real rows only") {
  const auto real = fixtures::adult_like(3000, 41);
  auto lib = std::make_shared<ReferenceLibrary>();
  lib->add(real);
  const MemorizingOracle oracle{lib, 5};
  RunOptions opt;
  opt.model_name = "mem";

  CHECK(accuracy(run_probe_set(oracle, gen_existence(real, 200, 1), opt)) == 1.0);
  CHECK(accuracy(run_probe_set(oracle, gen_completion(real, select_feature_pool(real), 200, 1), opt)) == 1.0);

  auto like = make_like(real, 8);
  const double like_acc = accuracy(run_probe_set(oracle, gen_existence(like, 500, 1), opt));
  CHECK(like_acc >= 0.12);
  CHECK(like_acc <= 0.28);
  const auto [obf, map] = make_obfuscated(real);
  const double obf_acc = accuracy(run_probe_set(oracle, gen_existence(obf, 500, 1), opt));
  CHECK(obf_acc >= 0.12);
  CHECK(obf_acc <= 0.28);
}

TEST_CASE("always-first oracle") {
  const auto ds = fixtures::adult_like(500, 2);
  RunOptions opt;
  opt.model_name = "first";
  for (const auto& t : run_probe_set(AlwaysFirstOracle{}, gen_existence(ds, 50, 2), opt)) {
    CHECK(t.answer_index == 0u);
    CHECK(t.correct == (t.truth_index == 0));
  }
}

TEST_CASE("endpoint config validation") {
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:1";
  e.model_name = "m";
  e.parallelism = 0;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e.parallelism = 1;
  e.temperature = -1;
  CHECK_THROWS_AS(e.validate(), ConfigError);
  e.temperature = 0;
  CHECK_NOTHROW(e.validate());
  e.base_url = "127.0.0.1:1";
  CHECK_THROWS_AS(ChatClient{e}, ConfigError);
}

TEST_CASE("chat client talks to the mock server") {
  MockServerOptions o;
  o.kind = MockKind::AlwaysFirst;
  MockServer server(o);
  server.start();
  const ChatClient client(fast_endpoint(server));
  const auto c = client.complete(simple_prompt());
  CHECK(c.text == "A");
  CHECK(c.attempts == 1);
  CHECK(server.request_count() == 1);
}

TEST_CASE("transient errors are retried then succeed") {
  for (int status : {503, 429, 500}) {
    MockServerOptions o;
    o.kind = MockKind::AlwaysFirst;
    o.fail_first = 2;
    o.fail_status = status;
    MockServer server(o);
    server.start();
    const auto c = ChatClient(fast_endpoint(server)).complete(simple_prompt());
    CHECK(c.text == "A");
    CHECK(c.attempts == 3);
    CHECK(server.request_count() == 3);
  }
}

TEST_CASE("retries are capped at 1 + max_retries") {
  MockServerOptions o;
  o.fail_first = 100;
  MockServer server(o);
  server.start();
  CHECK_THROWS_AS(ChatClient(fast_endpoint(server)).complete(simple_prompt()), TransientFailure);
  CHECK(server.request_count() == 4);
}

TEST_CASE("client errors are permanent and never retried") {
  MockServerOptions o;
  o.fail_first = 100;
  o.fail_status = 404;
  MockServer server(o);
  server.start();
  try {
    ChatClient(fast_endpoint(server)).complete(simple_prompt());
    FAIL("expected PermanentFailure");
  } catch (const PermanentFailure& e) {
    CHECK(e.status() == 404);
  }
  CHECK(server.request_count() == 1);
}

TEST_CASE("bearer token") {
  MockServerOptions o;
  o.kind = MockKind::AlwaysFirst;
  o.api_key = "sekrit";
  MockServer server(o);
  server.start();
  auto e = fast_endpoint(server);
  CHECK_THROWS_AS(ChatClient(e).complete(simple_prompt()), PermanentFailure);
  ::setenv("TABPROBE_TEST_KEY", "sekrit", 1);
  e.api_key_env = "TABPROBE_TEST_KEY";
  CHECK(ChatClient(e).complete(simple_prompt()).text == "A");
  e.api_key_env = "TABPROBE_TEST_KEY_ABSENT";
  CHECK_THROWS_AS(ChatClient{e}, ConfigError);
}

TEST_CASE("unreachable endpoint is transient") {
  EndpointConfig e;
  e.base_url = "http://127.0.0.1:9";
  e.model_name = "m";
  e.max_retries = 1;
  e.backoff_base_ms = 1;
  e.timeout_ms = 500;
  CHECK_THROWS_AS(ChatClient(e).complete(simple_prompt()), TransientFailure);
}

TEST_CASE("memorizing mock server answers like the in-process oracle") {
  const auto real = fixtures::adult_like(1500, 42);
  auto lib = std::make_shared<ReferenceLibrary>();
  lib->add(real);
  MockServerOptions o;
  o.kind = MockKind::Memorizing;
  o.reference = lib;
  MockServer server(o);
  server.start();
  RunOptions opt;
  opt.model_name = "remote";
  opt.parallelism = 4;
  const RemoteOracle remote{fast_endpoint(server)};
  CHECK(accuracy(run_probe_set(remote, gen_existence(real, 60, 4), opt)) == 1.0);
  CHECK(accuracy(run_probe_set(remote, gen_completion(real, select_feature_pool(real), 60, 4), opt)) == 1.0);
  const double like = accuracy(run_probe_set(remote, gen_existence(make_like(real, 1), 300, 4), opt));
  CHECK(like < 0.35);
}
