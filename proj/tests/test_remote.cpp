#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "evadebench/errors.hpp"
#include "evadebench/model_detectors.hpp"
#include "evadebench/remote.hpp"

using namespace evadebench;
using nlohmann::json;

namespace {

// Minimal completions / embeddings / detector endpoint on a random port.
class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      if (fail_first.exchange(false)) {
        res.status = 503;
        return;
      }
      const auto body = json::parse(req.body);
      last_body = body;
      json lp;
      if (body.value("echo", false)) {
        lp = {{"tokens", {"the", " cat", " sat"}},
              {"token_logprobs", {nullptr, std::log(0.5), std::log(0.25)}},
              {"top_logprobs",
               {nullptr,
                {{" cat", std::log(0.5)}, {" dog", std::log(0.3)}},
                {{" ran", std::log(0.5)}, {" sat", std::log(0.25)}}}}};
      } else {
        lp = {{"tokens", {" cat"}},
              {"token_logprobs", {std::log(0.6)}},
              {"top_logprobs", {{{" cat", std::log(0.6)}, {" dog", std::log(0.3)}}}}};
      }
      json out = {{"choices", {{{"text", "  rewritten text \n"}, {"logprobs", lp}}}},
                  {"usage", {{"peak_memory_bytes", 123456}}}};
      res.set_content(out.dump(), "application/json");
    });
    server_.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"data", {{{"embedding", {1.0, 0.0, 2.0}}}}}}.dump(), "application/json");
    });
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++detector_requests;
      const auto text = json::parse(req.body).at("text").get<std::string>();
      const double p = text == "bad" ? 7.0 : static_cast<double>(text.size() % 10) / 10.0;
      res.set_content(json{{"score", p}}.dump(), "application/json");
    });
    server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 400;
      res.set_content("nope", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> requests{0};
  std::atomic<int> detector_requests{0};
  std::atomic<bool> fail_first{false};
  json last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

lm::EndpointConfig config_for(const StubServer& s) {
  lm::EndpointConfig c;
  c.base_url = s.url();
  c.model = "stub";
  c.timeout = std::chrono::milliseconds(2000);
  return c;
}

}  // namespace

TEST(Remote, ScoresEchoedPromptSkippingFirstToken) {
  StubServer server;
  lm::RemoteLanguageModel m("remote", config_for(server), 5);
  const auto st = m.score_text("the cat sat");
  ASSERT_EQ(st.size(), 2u);
  EXPECT_NEAR(st.tokens[0].logprob, std::log(0.5), 1e-12);
  EXPECT_EQ(st.tokens[0].rank, 1);
  EXPECT_EQ(st.tokens[1].rank, 2);
  EXPECT_TRUE(server.last_body.at("echo").get<bool>());
  EXPECT_EQ(server.last_body.at("max_tokens"), 0);
  EXPECT_EQ(server.last_body.at("logprobs"), 5);
}

TEST(Remote, NextTokenDistributionCarriesTailMass) {
  StubServer server;
  lm::RemoteLanguageModel m("remote", config_for(server), 5);
  const auto d = m.next_token_distribution("the");
  EXPECT_TRUE(d.truncated);
  ASSERT_EQ(d.entries.size(), 2u);
  EXPECT_EQ(d.entries[0].token, " cat");
  EXPECT_NEAR(d.tail_mass, 0.1, 1e-12);
}

TEST(Remote, RetriesServerErrorsAndRecordsMemory) {
  StubServer server;
  server.fail_first = true;
  lm::reset_endpoint_memory();
  lm::RemoteRewriter r("rw", config_for(server));
  lm::RewriteRequest req;
  req.text = "hello";
  req.seed = 3;
  EXPECT_EQ(r.rewrite(req), "rewritten text");
  EXPECT_EQ(server.requests.load(), 2);
  EXPECT_EQ(server.last_body.at("seed"), 3);
  EXPECT_EQ(lm::endpoint_peak_memory(), 123456u);
}

TEST(Remote, ClientErrorsAreBackendErrors) {
  StubServer server;
  auto c = config_for(server);
  c.path = "/broken";
  lm::RemoteRewriter r("rw", c);
  lm::RewriteRequest req;
  req.text = "hello";
  EXPECT_THROW(r.rewrite(req), BackendError);
}

TEST(Remote, UnreachableEndpointFails) {
  lm::EndpointConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.timeout = std::chrono::milliseconds(200);
  c.max_retries = 0;
  lm::RemoteLanguageModel m("down", c, 5);
  EXPECT_THROW(m.score_text("a b"), BackendError);
}

TEST(Remote, Embeddings) {
  StubServer server;
  auto c = config_for(server);
  c.path = "/v1/embeddings";
  lm::RemoteEmbedder e("emb", c, 3);
  EXPECT_EQ(e.embed("anything"), (std::vector<double>{1.0, 0.0, 2.0}));
}

TEST(ExternalDetector, ScoresCachesAndValidates) {
  StubServer server;
  detectors::ExternalDetector d({"ext", server.url() + "/score", detectors::Direction::higher_is_mgt}, {}, true);
  const int after_probe = server.detector_requests.load();
  EXPECT_DOUBLE_EQ(d.score("abc"), 0.3);
  EXPECT_DOUBLE_EQ(d.score("abc"), 0.3);
  EXPECT_EQ(server.detector_requests.load(), after_probe + 1);
  EXPECT_THROW(d.score("bad"), BackendError);
  const auto batch = d.score_batch({"a", "abcd", "abcdefg"});
  EXPECT_EQ(batch, (std::vector<double>{0.1, 0.4, 0.7}));
}

TEST(ExternalDetector, DownEndpointFailsAtConstruction) {
  lm::EndpointConfig t;
  t.timeout = std::chrono::milliseconds(200);
  t.max_retries = 0;
  EXPECT_THROW(detectors::ExternalDetector({"ext", "http://127.0.0.1:1/score"}, t), BackendError);
}

TEST(SplitUrl, BaseAndPath) {
  EXPECT_EQ(detectors::split_url("http://h:1/a/b"), (std::pair<std::string, std::string>{"http://h:1", "/a/b"}));
  EXPECT_EQ(detectors::split_url("http://h:1").second, "/");
}
