#include "ecsp/http_backend.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ecsp/log.hpp"

namespace ecsp {

RateLimiter::RateLimiter(double requests_per_minute, double burst)
    : rate_per_ms_(requests_per_minute > 0 ? requests_per_minute / 60000.0 : 0.0),
      capacity_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_per_ms_ <= 0) return;
  for (;;) {
    double wait_ms = 0;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
      tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_ms = (1.0 - tokens_) / rate_per_ms_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(wait_ms));
  }
}

std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const std::size_t host_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_begin = url.find('/', host_begin);
  if (path_begin == std::string::npos) return {url, ""};
  std::string path = url.substr(path_begin);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_begin), path};
}

namespace {
thread_local int t_last_attempts = 0;
}

int HttpBackend::last_attempts() { return t_last_attempts; }

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_minute), rng_(std::random_device{}()) {
  if (config_.api_key.empty()) throw BackendError(BackendError::Kind::Config, "HTTP backend requires an API key");
  if (config_.model.empty()) throw BackendError(BackendError::Kind::Config, "HTTP backend requires a model name");
  if (config_.max_attempts < 1) config_.max_attempts = 1;
  if (!config_.sleep_ms) {
    config_.sleep_ms = [](std::int64_t ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
  }
  std::tie(scheme_host_, path_prefix_) = split_base_url(config_.api_base);
}

std::int64_t HttpBackend::backoff_ms(int attempt) {
  const double exp = static_cast<double>(config_.base_delay_ms) * std::pow(2.0, attempt - 1);
  const double capped = std::min(exp, static_cast<double>(config_.max_delay_ms));
  std::lock_guard lock(rng_mutex_);
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return static_cast<std::int64_t>(capped * jitter(rng_));
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  request.validate();
  t_last_attempts = 0;
  for (int attempt = 1;; ++attempt) {
    t_last_attempts = attempt;
    try {
      return this->attempt(request);
    } catch (const BackendError& e) {
      if (!e.retriable() || attempt >= config_.max_attempts) throw;
      std::int64_t delay = backoff_ms(attempt);
      if (e.retry_after_ms()) delay = std::max(delay, *e.retry_after_ms());
      log_warning(error_kind_name(e.kind()) + " (attempt " + std::to_string(attempt) + "): " + e.what() +
                  "; retrying in " + std::to_string(delay) + " ms");
      config_.sleep_ms(delay);
    }
  }
}

CompletionResponse HttpBackend::attempt(const CompletionRequest& request) {
  limiter_.acquire();
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
      {"max_tokens", request.max_output_tokens},
      {"temperature", request.temperature},
  };
  if (request.stop) body["stop"] = *request.stop;

  httplib::Client client(scheme_host_);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  client.set_write_timeout(config_.timeout_seconds);
  const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
  const auto latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();

  if (!res) {
    throw BackendError(BackendError::Kind::Network, "transport failure: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw BackendError(BackendError::Kind::Auth, "HTTP " + std::to_string(status) + " from " + scheme_host_);
  }
  if (status == 429) {
    std::optional<std::int64_t> retry_after;
    if (res->has_header("Retry-After")) {
      try {
        retry_after = static_cast<std::int64_t>(std::stod(res->get_header_value("Retry-After")) * 1000.0);
      } catch (const std::exception&) {
      }
    }
    throw BackendError(BackendError::Kind::RateLimited, "HTTP 429 rate limited", retry_after);
  }
  if (status >= 500) throw BackendError(BackendError::Kind::Network, "HTTP " + std::to_string(status));
  if (status != 200) {
    throw BackendError(BackendError::Kind::BadRequest, "HTTP " + std::to_string(status) + ": " + res->body);
  }

  CompletionResponse out;
  out.latency_ms = latency;
  try {
    const auto parsed = nlohmann::json::parse(res->body);
    const auto& content = parsed.at("choices").at(0).at("message").at("content");
    out.text = content.is_null() ? std::string() : content.get<std::string>();
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
      const auto& u = parsed["usage"];
      out.usage = Usage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendError::Kind::MalformedResponse, std::string("unparseable completion body: ") + e.what());
  }
  return out;
}

}  // namespace ecsp
