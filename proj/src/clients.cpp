#include "forge/clients.hpp"

#include <chrono>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace forge {

namespace {

using json = nlohmann::ordered_json;

json post_json(httplib::Client& client, const std::string& path, const json& body,
               const std::string& what) {
  httplib::Result res = client.Post(path, body.dump(), "application/json");
  if (!res)
    throw ClientError(what + ": transport error (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw ClientError(what + ": HTTP " + std::to_string(res->status) + " " + res->body);
  json reply = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (reply.is_discarded() || !reply.is_object())
    throw ClientError(what + ": response is not a JSON object");
  return reply;
}

}  // namespace

void sleep_ms(int ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

struct HttpLlmClient::Impl {
  httplib::Client client;
  Impl(const std::string& base_url, int timeout_s, const std::string& token) : client(base_url) {
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    if (!token.empty()) client.set_bearer_token_auth(token);
  }
};

HttpLlmClient::HttpLlmClient(std::string base_url, int timeout_s, std::string bearer_token)
    : impl_(std::make_unique<Impl>(base_url, timeout_s, bearer_token)) {}

HttpLlmClient::~HttpLlmClient() = default;

LlmResponse HttpLlmClient::complete(const LlmRequest& request) {
  json body;
  body["prompt"] = request.prompt;
  json reply = post_json(impl_->client, "/v1/complete", body, "llm");
  if (!reply.contains("completion") || !reply["completion"].is_string())
    throw ClientError("llm: response missing string field 'completion'");
  return LlmResponse{reply["completion"].get<std::string>()};
}

struct HttpTtsClient::Impl {
  httplib::Client client;
  Impl(const std::string& base_url, int timeout_s, const std::string& token) : client(base_url) {
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    if (!token.empty()) client.set_bearer_token_auth(token);
  }
};

HttpTtsClient::HttpTtsClient(std::string base_url, int timeout_s, std::string bearer_token)
    : impl_(std::make_unique<Impl>(base_url, timeout_s, bearer_token)) {}

HttpTtsClient::~HttpTtsClient() = default;

TtsResponse HttpTtsClient::synthesize(const TtsRequest& request) {
  json body;
  body["text"] = request.text;
  body["voice_id"] = request.voice_id;
  json reply = post_json(impl_->client, "/v1/synthesize", body, "tts");
  TtsResponse out;
  if (!reply.contains("audio_ref") || !reply["audio_ref"].is_string())
    throw ClientError("tts: response missing string field 'audio_ref'");
  out.audio_ref = reply["audio_ref"].get<std::string>();
  if (reply.contains("duration_s")) out.duration_s = reply["duration_s"].get<double>();
  if (reply.contains("audio_tokens")) {
    for (const json& t : reply["audio_tokens"]) out.audio_tokens.push_back(t.get<std::int64_t>());
  }
  return out;
}

struct RateLimiter::Impl {
  std::mutex mutex;
  std::chrono::steady_clock::time_point next = std::chrono::steady_clock::now();
  std::chrono::nanoseconds interval{0};
};

RateLimiter::RateLimiter(double rate_per_s) : impl_(std::make_shared<Impl>()) {
  if (rate_per_s > 0)
    impl_->interval = std::chrono::nanoseconds(static_cast<std::int64_t>(1e9 / rate_per_s));
}

void RateLimiter::acquire() {
  if (impl_->interval.count() == 0) return;
  std::chrono::steady_clock::time_point wake;
  {
    std::lock_guard<std::mutex> lock(impl_->mutex);
    auto now = std::chrono::steady_clock::now();
    if (impl_->next < now) impl_->next = now;
    wake = impl_->next;
    impl_->next += impl_->interval;
  }
  std::this_thread::sleep_until(wake);
}

}  // namespace forge
