#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "cwu/remote_embedder.hpp"
#include "cwu/remote_llm.hpp"

namespace {

// Local HTTP server for hermetic client tests; binds an ephemeral port.
class LocalServer {
 public:
  LocalServer() = default;

  ~LocalServer() { stop(); }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  httplib::Server server_;

 private:
  int port_ = 0;
  std::thread thread_;
};

cwu::EmbeddingProviderConfig remote_config(const std::string& url) {
  cwu::EmbeddingProviderConfig cfg;
  cfg.kind = cwu::EmbeddingProviderConfig::Kind::remote;
  cfg.endpoint_url = url;
  cfg.model_name = "test-embedder";
  cfg.batch_size = 2;
  cfg.max_retries = 1;
  cfg.retry_delay_ms = 0;
  cfg.timeout_sec = 5;
  return cfg;
}

}  // namespace

TEST_CASE("remote embedder posts batches and re-sorts by index", "[remote]") {
  LocalServer server;
  std::atomic<int> requests{0};
  server.server_.Post("/v1/embeddings", [&](const httplib::Request& req,
                                            httplib::Response& res) {
    ++requests;
    const auto body = nlohmann::json::parse(req.body);
    REQUIRE(body.at("model") == "test-embedder");
    const auto& inputs = body.at("input");
    // Answer out of order on purpose; the client must re-sort by index.
    nlohmann::json data = nlohmann::json::array();
    for (std::size_t i = inputs.size(); i-- > 0;) {
      const double mark = static_cast<double>(inputs[i].get<std::string>().size());
      data.push_back({{"index", i}, {"embedding", {mark, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}}});
    }
    res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
  });
  server.start();

  cwu::RemoteEmbedder embedder(remote_config(server.url() + "/v1"));
  const std::vector<std::string> texts = {"a", "bb", "ccc"};
  const auto vecs = embedder.embed_batch(texts);
  REQUIRE(vecs.size() == 3);
  CHECK(requests == 2);  // batch_size 2 -> two requests
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(vecs[i].dim == 8);
    CHECK(vecs[i].normalized);
    // First component encodes the input length; order must match inputs.
    const double expected = static_cast<double>(texts[i].size());
    CHECK(vecs[i].values[0] / vecs[i].values[1] == Catch::Approx(expected));
  }
}

TEST_CASE("remote embedder maps 4xx to a non-retryable error", "[remote]") {
  LocalServer server;
  std::atomic<int> requests{0};
  server.server_.Post("/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    ++requests;
    res.status = 422;
    res.set_content("{\"error\":\"bad input\"}", "application/json");
  });
  server.start();

  cwu::RemoteEmbedder embedder(remote_config(server.url()));
  try {
    embedder.embed_batch({"text"});
    FAIL("expected ProviderError");
  } catch (const cwu::ProviderError& e) {
    CHECK_FALSE(e.retryable());
    CHECK(e.http_status() == 422);
  }
  CHECK(requests == 1);  // no retry on 4xx
}

TEST_CASE("remote embedder retries 5xx then gives up", "[remote]") {
  LocalServer server;
  std::atomic<int> requests{0};
  server.server_.Post("/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    ++requests;
    res.status = 503;
  });
  server.start();

  auto cfg = remote_config(server.url());
  cfg.max_retries = 2;
  cwu::RemoteEmbedder embedder(cfg);
  try {
    embedder.embed_batch({"text"});
    FAIL("expected ProviderError");
  } catch (const cwu::ProviderError& e) {
    CHECK(e.retryable());
    CHECK(e.http_status() == 503);
  }
  CHECK(requests == 3);  // initial try + 2 retries
}

TEST_CASE("remote embedder surfaces transport failure as retryable", "[remote]") {
  auto cfg = remote_config("http://127.0.0.1:9");  // nothing listens here
  cfg.max_retries = 0;
  cfg.timeout_sec = 1;
  cwu::RemoteEmbedder embedder(cfg);
  try {
    embedder.embed_batch({"text"});
    FAIL("expected ProviderError");
  } catch (const cwu::ProviderError& e) {
    CHECK(e.retryable());
    CHECK(e.http_status() == 0);
  }
}

TEST_CASE("chat provider returns the first choice content", "[remote]") {
  LocalServer server;
  server.server_.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                                  httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    CHECK(body.at("temperature") == 0);
    CHECK(body.at("max_tokens") == 64);
    CHECK(body.at("messages").size() == 2);
    CHECK(body.at("messages")[0].at("role") == "system");
    nlohmann::json reply = {
        {"choices",
         {{{"message", {{"role", "assistant"}, {"content", "forty-two"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  server.start();

  cwu::ModelProfile profile;
  profile.name = "test-model";
  profile.endpoint_url = server.url() + "/v1";
  profile.context_length = 4096;
  profile.max_output_tokens = 64;

  cwu::RemoteChatProvider provider({.max_retries = 0, .retry_delay_ms = 0, .timeout_sec = 5});
  const auto prompt = cwu::assemble_prompt("What is the answer?", {"The answer is forty-two."});
  const auto outcome = provider.generate(profile, prompt);
  REQUIRE(outcome.status == cwu::GenerationStatus::ok);
  CHECK(outcome.answer == "forty-two");
}

TEST_CASE("chat provider maps HTTP 400 to api_error with the status", "[remote]") {
  LocalServer server;
  std::atomic<int> requests{0};
  server.server_.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++requests;
    res.status = 400;
    res.set_content("{\"error\":\"bad request\"}", "application/json");
  });
  server.start();

  cwu::ModelProfile profile;
  profile.name = "m";
  profile.endpoint_url = server.url();
  profile.context_length = 4096;
  profile.max_output_tokens = 16;

  cwu::RemoteChatProvider provider({.max_retries = 3, .retry_delay_ms = 0, .timeout_sec = 5});
  const auto outcome = provider.generate(profile, cwu::assemble_prompt("q?", {}));
  CHECK(outcome.status == cwu::GenerationStatus::api_error);
  CHECK(outcome.http_status == 400);
  CHECK(requests == 1);  // 4xx is not retried
}

TEST_CASE("chat provider retries transport failures then reports api_error", "[remote]") {
  cwu::ModelProfile profile;
  profile.name = "m";
  profile.endpoint_url = "http://127.0.0.1:9";
  profile.context_length = 4096;
  profile.max_output_tokens = 16;

  cwu::RemoteChatProvider provider({.max_retries = 1, .retry_delay_ms = 0, .timeout_sec = 1});
  const auto outcome = provider.generate(profile, cwu::assemble_prompt("q?", {}));
  CHECK(outcome.status == cwu::GenerationStatus::api_error);
  CHECK(outcome.http_status == 0);
}

TEST_CASE("chat provider never calls out when over budget", "[remote]") {
  std::atomic<int> requests{0};
  LocalServer server;
  server.server_.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++requests;
    res.set_content("{}", "application/json");
  });
  server.start();

  cwu::ModelProfile profile;
  profile.name = "m";
  profile.endpoint_url = server.url();
  profile.max_output_tokens = 8;

  auto prompt = cwu::assemble_prompt("q?", {"ctx"});
  profile.context_length = prompt.prompt_tokens + 7;  // U + 8 > L
  cwu::RemoteChatProvider provider({.max_retries = 0, .retry_delay_ms = 0, .timeout_sec = 5});
  const auto outcome = provider.generate(profile, prompt);
  CHECK(outcome.status == cwu::GenerationStatus::context_overflow);
  CHECK(requests == 0);
}

TEST_CASE("malformed chat responses become api_error", "[remote]") {
  LocalServer server;
  server.server_.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json at all", "text/plain");
  });
  server.start();

  cwu::ModelProfile profile;
  profile.name = "m";
  profile.endpoint_url = server.url();
  profile.context_length = 4096;
  profile.max_output_tokens = 16;

  cwu::RemoteChatProvider provider({.max_retries = 0, .retry_delay_ms = 0, .timeout_sec = 5});
  const auto outcome = provider.generate(profile, cwu::assemble_prompt("q?", {}));
  CHECK(outcome.status == cwu::GenerationStatus::api_error);
}
