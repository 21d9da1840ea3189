#include "evadebench/remote.hpp"

#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "evadebench/errors.hpp"

namespace evadebench::lm {

using nlohmann::json;

struct JsonClient::Impl {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t in_flight = 0;
};

JsonClient::JsonClient(EndpointConfig config) : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  if (config_.base_url.empty()) throw InputError("endpoint base_url is empty");
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
}

JsonClient::~JsonClient() = default;

json JsonClient::post(const std::string& path, const json& body) const {
  {
    std::unique_lock lock(impl_->mu);
    impl_->cv.wait(lock, [&] { return impl_->in_flight < config_.max_in_flight; });
    ++impl_->in_flight;
  }
  struct Release {
    Impl* impl;
    ~Release() {
      {
        std::lock_guard lock(impl->mu);
        --impl->in_flight;
      }
      impl->cv.notify_one();
    }
  } release{impl_.get()};

  httplib::Client cli(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    auto res = cli.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError(config_.base_url + path + " answered HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception&) {
      throw BackendError(config_.base_url + path + " answered with non-JSON body");
    }
  }
  throw BackendError(config_.base_url + path + " failed after retries: " + last_error);
}

void note_reported_memory(const json& response) {
  auto usage = response.find("usage");
  if (usage == response.end() || !usage->is_object()) return;
  auto mem = usage->find("peak_memory_bytes");
  if (mem != usage->end() && mem->is_number_unsigned()) report_endpoint_memory(mem->get<std::uint64_t>());
}

namespace {

const json& first_choice(const json& response) {
  auto it = response.find("choices");
  if (it == response.end() || !it->is_array() || it->empty()) throw BackendError("response has no choices");
  return (*it)[0];
}

}  // namespace

RemoteLanguageModel::RemoteLanguageModel(std::string id, EndpointConfig config, std::size_t top_k,
                                         std::optional<std::uint64_t> vocab_fingerprint)
    : client_(std::move(config)), top_k_(top_k) {
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::remote_endpoint;
  descriptor_.top_k = top_k;
  descriptor_.vocab_fingerprint = vocab_fingerprint;
  validate(descriptor_);
}

json RemoteLanguageModel::complete(std::string_view prompt, int max_tokens, bool echo) const {
  json body = {{"model", client_.config().model},
               {"prompt", std::string(prompt)},
               {"max_tokens", max_tokens},
               {"temperature", 0.0},
               {"logprobs", top_k_},
               {"echo", echo}};
  json response = client_.post(client_.config().path, body);
  note_reported_memory(response);
  return response;
}

TokenDistribution RemoteLanguageModel::parse_top(const json& top) const {
  TokenDistribution d;
  d.truncated = true;
  if (!top.is_object()) throw BackendError("top_logprobs entry is not an object");
  for (const auto& [tok, lp] : top.items()) {
    if (!lp.is_number()) throw BackendError("top_logprobs value is not a number");
    d.entries.push_back({tok, std::min(lp.get<double>(), 0.0)});
  }
  d.canonicalize();
  if (d.entries.size() > top_k_) d.entries.resize(top_k_);
  double mass = 0.0;
  for (const auto& e : d.entries) mass += std::exp(e.logprob);
  d.tail_mass = std::max(0.0, 1.0 - mass);
  return d;
}

TokenDistribution RemoteLanguageModel::do_next_token_distribution(std::string_view prefix) const {
  const json response = complete(prefix, 1, false);
  try {
    const json& lp = first_choice(response).at("logprobs");
    const json& tops = lp.at("top_logprobs");
    if (!tops.is_array() || tops.empty()) throw BackendError("response has no top_logprobs");
    return parse_top(tops[0]);
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed completions response: ") + e.what());
  }
}

std::vector<PositionDistribution> RemoteLanguageModel::do_position_distributions(std::string_view input) const {
  const json response = complete(input, 0, true);
  std::vector<PositionDistribution> out;
  try {
    const json& lp = first_choice(response).at("logprobs");
    const json& tokens = lp.at("tokens");
    const json& token_lps = lp.at("token_logprobs");
    const json& tops = lp.at("top_logprobs");
    if (tokens.size() != token_lps.size() || tokens.size() != tops.size()) {
      throw BackendError("logprobs arrays have mismatched lengths");
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (token_lps[i].is_null() || tops[i].is_null()) continue;
      PositionDistribution pos;
      pos.surface = tokens[i].get<std::string>();
      pos.token = pos.surface;
      pos.logprob = std::min(token_lps[i].get<double>(), 0.0);
      pos.dist = parse_top(tops[i]);
      out.push_back(std::move(pos));
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed completions response: ") + e.what());
  }
  return out;
}

RemoteRewriter::RemoteRewriter(std::string id, EndpointConfig config) : client_(std::move(config)) {
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::remote_endpoint;
  descriptor_.top_k = 1;
}

std::string RemoteRewriter::do_rewrite(const RewriteRequest& req) const {
  json body = {{"model", client_.config().model},
               {"prompt", req.rendered_prompt()},
               {"max_tokens", req.max_tokens},
               {"temperature", req.temperature}};
  if (req.seed) body["seed"] = *req.seed;
  const json response = client_.post(client_.config().path, body);
  note_reported_memory(response);
  try {
    std::string textout = first_choice(response).at("text").get<std::string>();
    const auto b = textout.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = textout.find_last_not_of(" \t\r\n");
    return textout.substr(b, e - b + 1);
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed completions response: ") + e.what());
  }
}

RemoteEmbedder::RemoteEmbedder(std::string id, EndpointConfig config, std::size_t dimension)
    : client_(std::move(config)), dimension_(dimension) {
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::remote_endpoint;
  descriptor_.top_k = 1;
}

std::vector<double> RemoteEmbedder::do_embed(std::string_view input) const {
  const json response = client_.post(client_.config().path,
                                     {{"model", client_.config().model}, {"input", std::string(input)}});
  note_reported_memory(response);
  try {
    return response.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed embeddings response: ") + e.what());
  }
}

}  // namespace evadebench::lm
