#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "forge/error.hpp"

namespace forge {

// HTTP-style client contracts for the two external generators. Both speak
// JSON bodies; the library never touches raw audio, a synthesis result is a
// job reference plus the produced token span.

struct LlmRequest {
  std::string prompt;
};

struct LlmResponse {
  std::string completion;
};

struct TtsRequest {
  std::string text;
  std::string voice_id;
};

struct TtsResponse {
  std::string audio_ref;
  double duration_s = 0.0;
  std::vector<std::int64_t> audio_tokens;
};

class ClientError : public StageError {
 public:
  explicit ClientError(const std::string& what) : StageError(what) {}
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual LlmResponse complete(const LlmRequest& request) = 0;
};

class TtsClient {
 public:
  virtual ~TtsClient() = default;
  virtual TtsResponse synthesize(const TtsRequest& request) = 0;
};

// POST {base_url}/v1/complete  {"prompt": ...} -> {"completion": ...}
// A non-empty bearer token is sent as an Authorization header; credentials
// come from the environment, never from config files.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(std::string base_url, int timeout_s = 30, std::string bearer_token = "");
  ~HttpLlmClient() override;
  LlmResponse complete(const LlmRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// POST {base_url}/v1/synthesize  {"text": ..., "voice_id": ...}
//   -> {"audio_ref": ..., "duration_s": ..., "audio_tokens": [...]}
class HttpTtsClient : public TtsClient {
 public:
  explicit HttpTtsClient(std::string base_url, int timeout_s = 30, std::string bearer_token = "");
  ~HttpTtsClient() override;
  TtsResponse synthesize(const TtsRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RetryConfig {
  int max_attempts = 3;          // total tries per call
  int initial_backoff_ms = 100;  // doubles per retry up to the cap
  double multiplier = 2.0;
  int max_backoff_ms = 2000;
};

void sleep_ms(int ms);

// Runs fn with exponential backoff on ClientError. on_retry fires before each
// re-attempt; the last error propagates once attempts are exhausted.
template <typename T>
T with_retries(const RetryConfig& config, const std::function<T()>& fn,
               const std::function<void(int attempt, const std::string& error)>& on_retry = {}) {
  if (config.max_attempts < 1) throw ValidationError("retry: max_attempts must be >= 1");
  double backoff = config.initial_backoff_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const ClientError& e) {
      if (attempt >= config.max_attempts) throw;
      if (on_retry) on_retry(attempt, e.what());
      sleep_ms(static_cast<int>(backoff));
      backoff = std::min(backoff * config.multiplier, static_cast<double>(config.max_backoff_ms));
    }
  }
}

// In-process test doubles. Handlers must be thread-safe; synthesis drives
// them concurrently.
class FnLlmClient : public LlmClient {
 public:
  explicit FnLlmClient(std::function<LlmResponse(const LlmRequest&)> fn) : fn_(std::move(fn)) {}
  LlmResponse complete(const LlmRequest& request) override { return fn_(request); }

 private:
  std::function<LlmResponse(const LlmRequest&)> fn_;
};

class FnTtsClient : public TtsClient {
 public:
  explicit FnTtsClient(std::function<TtsResponse(const TtsRequest&)> fn) : fn_(std::move(fn)) {}
  TtsResponse synthesize(const TtsRequest& request) override { return fn_(request); }

 private:
  std::function<TtsResponse(const TtsRequest&)> fn_;
};

// Spaces out call starts to at most rate_per_s across threads. rate <= 0
// means unthrottled.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_s);
  void acquire();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace forge
