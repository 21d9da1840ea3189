#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "evadebench/lm.hpp"

namespace evadebench::lm {

struct EndpointConfig {
  std::string base_url;            // e.g. "http://127.0.0.1:8000"
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key;             // sent as "Authorization: Bearer ..." when set
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 4;
  int max_retries = 2;             // transport failures and 5xx only
};

// Bounded-concurrency JSON-over-HTTP POST with retries. Thread safe.
class JsonClient {
 public:
  explicit JsonClient(EndpointConfig config);
  ~JsonClient();
  JsonClient(const JsonClient&) = delete;
  JsonClient& operator=(const JsonClient&) = delete;

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  const EndpointConfig& config() const { return config_; }

 private:
  struct Impl;
  EndpointConfig config_;
  std::unique_ptr<Impl> impl_;
};

// Scoring through a completions endpoint with logprobs:
//   {"model", "prompt", "max_tokens": 0|1, "temperature": 0, "logprobs": K, "echo": true|false}
// The first echoed token has no conditional logprob and is not scored.
class RemoteLanguageModel final : public LanguageModel {
 public:
  RemoteLanguageModel(std::string id, EndpointConfig config, std::size_t top_k,
                      std::optional<std::uint64_t> vocab_fingerprint = std::nullopt);
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  TokenDistribution do_next_token_distribution(std::string_view prefix) const override;
  std::vector<PositionDistribution> do_position_distributions(std::string_view text) const override;

 private:
  nlohmann::json complete(std::string_view prompt, int max_tokens, bool echo) const;
  TokenDistribution parse_top(const nlohmann::json& top) const;

  JsonClient client_;
  std::size_t top_k_;
  BackendDescriptor descriptor_;
};

// Free-form completion with an instruction-bearing prompt.
class RemoteRewriter final : public Rewriter {
 public:
  RemoteRewriter(std::string id, EndpointConfig config);
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 protected:
  std::string do_rewrite(const RewriteRequest& req) const override;

 private:
  JsonClient client_;
  BackendDescriptor descriptor_;
};

// {"model", "input"} -> {"data": [{"embedding": [...]}]}
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string id, EndpointConfig config, std::size_t dimension);
  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::size_t dimension() const override { return dimension_; }

 protected:
  std::vector<double> do_embed(std::string_view text) const override;

 private:
  JsonClient client_;
  std::size_t dimension_;
  BackendDescriptor descriptor_;
};

// Records an endpoint-reported memory figure, if the response carries
// "usage": {"peak_memory_bytes": N}.
void note_reported_memory(const nlohmann::json& response);

}  // namespace evadebench::lm
