#include <cstdlib>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>

// Same configuration as the library so both see one definition of httplib.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "acgen/providers/http_transport.hpp"
#include "acgen/providers/provider.hpp"
#include "expect_error.hpp"
#include "support.hpp"

using namespace acgen;
using namespace acgen::providers;
using nlohmann::json;

namespace {

/// Local OpenAI-style server that records requests and replays canned answers.
class FakeServer {
 public:
  FakeServer() {
    server_.Post(R"(/v1/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      paths.push_back(req.path);
      bodies.push_back(json::parse(req.body));
      auths.push_back(req.get_header_value("Authorization"));
      if (!statuses.empty()) {
        res.status = statuses.front();
        statuses.erase(statuses.begin());
        if (res.status != 200) return;
      }
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  ProviderConfig config() const {
    ProviderConfig c;
    c.name = "remote";
    c.backend = BackendKind::Http;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model_name = "test-model";
    c.timeout = std::chrono::milliseconds(5000);
    c.retry.max_attempts = 3;
    c.retry.backoff_base = std::chrono::milliseconds(10);
    return c;
  }

  json reply;
  std::vector<int> statuses;  // consumed one per request; empty = 200
  std::vector<std::string> paths;
  std::vector<json> bodies;
  std::vector<std::string> auths;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
};

json chat_reply(const std::string& text) {
  return {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}};
}

struct Sleeps {
  std::vector<long> ms;
  HttpTransport::Sleeper fn() {
    return [this](std::chrono::milliseconds d) { ms.push_back(static_cast<long>(d.count())); };
  }
};

}  // namespace

TEST(Http, ChatSendsOpenAiShapeWithImageDataUrl) {
  FakeServer server;
  server.reply = chat_reply("GIVEN a WHEN b THEN c");
  ::setenv("ACGEN_TEST_KEY", "secret", 1);
  auto cfg = server.config();
  cfg.api_key_env = "ACGEN_TEST_KEY";
  Provider p(cfg, std::make_shared<HttpTransport>(cfg));

  ChatRequest req;
  req.messages.push_back(Message::text(Role::System, "be brief"));
  req.messages.push_back({Role::User, {TextPart{"look"}, ImagePart{"QUJD", "image/png"}}});
  req.sampling = Sampling{0.0, 0.1};
  req.purpose = "generate";
  req.metadata = {{"story_id", "S1"}};
  EXPECT_EQ(p.chat(req).text, "GIVEN a WHEN b THEN c");

  ASSERT_EQ(server.paths.size(), 1u);
  EXPECT_EQ(server.paths[0], "/v1/chat/completions");
  EXPECT_EQ(server.auths[0], "Bearer secret");
  const json& body = server.bodies[0];
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("temperature"), 0.0);
  EXPECT_EQ(body.at("top_p"), 0.1);
  EXPECT_EQ(body.at("messages").at(0).at("role"), "system");
  EXPECT_EQ(body.at("messages").at(1).at("content").at(1).at("image_url").at("url"), "data:image/png;base64,QUJD");
  EXPECT_FALSE(body.contains("metadata"));
  EXPECT_FALSE(body.contains("purpose"));
}

TEST(Http, MissingApiKeyFailsAtConstruction) {
  FakeServer server;
  auto cfg = server.config();
  cfg.api_key_env = "ACGEN_TEST_KEY_THAT_IS_NOT_SET";
  ::unsetenv("ACGEN_TEST_KEY_THAT_IS_NOT_SET");
  EXPECT_ERROR_CODE(HttpTransport{cfg}, ConfigError);
  EXPECT_TRUE(server.paths.empty());
}

TEST(Http, RetriesServerErrorsWithExponentialBackoff) {
  FakeServer server;
  server.reply = chat_reply("ok");
  server.statuses = {503, 500, 200};
  Sleeps sleeps;
  HttpTransport t(server.config(), sleeps.fn());
  auto out = t.call("chat", {{"model", "test-model"}, {"messages", json::array()}});
  EXPECT_EQ(out.at("text"), "ok");
  EXPECT_EQ(server.paths.size(), 3u);
  EXPECT_EQ(sleeps.ms, (std::vector<long>{10, 20}));
}

TEST(Http, PersistentRateLimitRaisesRateLimited) {
  FakeServer server;
  server.statuses = {429, 429, 429};
  Sleeps sleeps;
  HttpTransport t(server.config(), sleeps.fn());
  try {
    t.call("chat", {{"model", "test-model"}, {"messages", json::array()}});
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RateLimited);
    EXPECT_EQ(e.details().at("attempts"), 3);
    EXPECT_EQ(e.details().at("status"), 429);
  }
  EXPECT_EQ(server.paths.size(), 3u);
}

TEST(Http, ClientErrorIsNotRetried) {
  FakeServer server;
  server.statuses = {400};
  HttpTransport t(server.config(), Sleeps{}.fn());
  EXPECT_ERROR_CODE(t.call("chat", {{"model", "m"}, {"messages", json::array()}}), Transport);
  EXPECT_EQ(server.paths.size(), 1u);
}

TEST(Http, ConnectionFailureIsTransportError) {
  ProviderConfig cfg;
  cfg.name = "dead";
  cfg.backend = BackendKind::Http;
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.model_name = "m";
  cfg.retry.max_attempts = 2;
  cfg.timeout = std::chrono::milliseconds(500);
  Sleeps sleeps;
  HttpTransport t(cfg, sleeps.fn());
  EXPECT_ERROR_CODE(t.call("embed_text", {{"model", "m"}, {"input", "x"}}), Transport);
  EXPECT_EQ(sleeps.ms.size(), 1u);
}

TEST(Http, Embeddings) {
  FakeServer server;
  server.reply = {{"data", json::array({{{"embedding", {3.0, 4.0}}}})}};
  auto cfg = server.config();
  Provider p(cfg, std::make_shared<HttpTransport>(cfg));
  auto v = p.embed_text("hello");
  EXPECT_NEAR(v.values[0], 0.6, 1e-12);
  EXPECT_NEAR(v.values[1], 0.8, 1e-12);
  EXPECT_EQ(server.paths[0], "/v1/embeddings");
  EXPECT_EQ(server.bodies[0].at("input"), "hello");

  corpus::VisualDoc doc;
  doc.id = "v";
  doc.image = support::tiny_png("x");
  doc.media_type = "image/png";
  p.embed_image(doc);
  std::string url = server.bodies[1].at("input").at(0).at("image");
  EXPECT_TRUE(url.starts_with("data:image/png;base64,iVBOR"));
}

TEST(Http, ImageToHtmlStripsCodeFence) {
  FakeServer server;
  server.reply = chat_reply("```html\n<p>screen</p>\n```");
  auto cfg = server.config();
  Provider p(cfg, std::make_shared<HttpTransport>(cfg));
  corpus::VisualDoc doc;
  doc.id = "v";
  doc.image = support::tiny_png("x");
  doc.media_type = "image/png";
  EXPECT_EQ(p.image_to_html(doc), "<p>screen</p>");
}

TEST(Http, NextTokenLogprobs) {
  FakeServer server;
  server.reply = {{"choices", json::array({{{"message", {{"content", "Yes"}}},
                                            {"logprobs",
                                             {{"content", json::array({{{"token", "Yes"},
                                                                        {"logprob", -0.1},
                                                                        {"top_logprobs",
                                                                         json::array({{{"token", "Yes"}, {"logprob", -0.1}},
                                                                                      {{"token", "No"}, {"logprob", -2.4}}})}}})}}}}})}};
  auto cfg = server.config();
  Provider p(cfg, std::make_shared<HttpTransport>(cfg));
  double y = yes_probability(p, "Is it?");
  EXPECT_NEAR(y, std::exp(-0.1) / (std::exp(-0.1) + std::exp(-2.4)), 1e-12);
  EXPECT_EQ(server.bodies[0].at("max_tokens"), 1);
  EXPECT_EQ(server.bodies[0].at("top_logprobs"), 20);
}

TEST(Http, ContinuationLogprobsKeepOnlyContinuationTokens) {
  FakeServer server;
  server.reply = {{"choices", json::array({{{"logprobs",
                                             {{"tokens", {"ctx", " more", " a", " b"}},
                                              {"token_logprobs", {nullptr, -0.5, -1.0, -3.0}},
                                              {"text_offset", {0, 3, 8, 10}}}}}})}};
  auto cfg = server.config();
  Provider p(cfg, std::make_shared<HttpTransport>(cfg));
  auto s = sequence_logprob(p, "ctx more", " a b");
  EXPECT_EQ(s.tokens, 2u);
  EXPECT_DOUBLE_EQ(s.total, -4.0);
  EXPECT_EQ(server.paths[0], "/v1/completions");
  EXPECT_EQ(server.bodies[0].at("echo"), true);
  EXPECT_EQ(server.bodies[0].at("prompt"), "ctx more a b");
}

TEST(Http, MalformedReplyIsTransportError) {
  FakeServer server;
  server.reply = {{"unexpected", true}};
  auto cfg = server.config();
  Provider p(cfg, std::make_shared<HttpTransport>(cfg));
  ChatRequest req;
  req.messages.push_back(Message::text(Role::User, "x"));
  EXPECT_ERROR_CODE(p.chat(req), Transport);
}
