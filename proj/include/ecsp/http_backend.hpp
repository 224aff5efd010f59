#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>

#include "ecsp/backend.hpp"

namespace ecsp {

/// Token bucket shared by all in-flight requests of one backend.
class RateLimiter {
 public:
  /// requests_per_minute <= 0 disables limiting.
  explicit RateLimiter(double requests_per_minute, double burst = 1.0);

  /// Blocks until a token is available.
  void acquire();

 private:
  double rate_per_ms_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

struct HttpBackendConfig {
  /// e.g. "https://api.openai.com/v1"; requests go to <base>/chat/completions.
  std::string api_base = "https://api.openai.com/v1";
  std::string model;
  std::string api_key;
  double requests_per_minute = 0.0;
  int max_attempts = 5;
  std::int64_t base_delay_ms = 500;
  std::int64_t max_delay_ms = 30000;
  int timeout_seconds = 120;
  /// Replaced in tests to avoid real sleeping.
  std::function<void(std::int64_t)> sleep_ms;
};

/// OpenAI-compatible chat/completions client.
///
/// Network failures and HTTP 5xx are retried with exponential backoff and
/// jitter; HTTP 429 is retried after max(server Retry-After, backoff).
/// HTTP 401/403 raise an Auth error immediately. Unparseable bodies raise
/// MalformedResponse and are not retried.
class HttpBackend final : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return "http:" + config_.model; }

  /// Attempts made by the last complete() on the calling thread.
  static int last_attempts();

 private:
  CompletionResponse attempt(const CompletionRequest& request);
  std::int64_t backoff_ms(int attempt);

  HttpBackendConfig config_;
  std::string scheme_host_;
  std::string path_prefix_;
  RateLimiter limiter_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

/// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_base_url(const std::string& url);

}  // namespace ecsp
