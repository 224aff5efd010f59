#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecsp {

/// Which prompt a request carries. Routing hint for the offline mock.
enum class PromptKind { Segment, Ambiguity, Select, Decontext, Vanilla };

std::string kind_name(PromptKind kind);

struct CompletionRequest {
  std::string prompt;
  int max_output_tokens = 512;
  double temperature = 0.0;
  std::string model_id;
  std::optional<std::vector<std::string>> stop;
  PromptKind kind = PromptKind::Segment;

  /// Throws std::invalid_argument when max_output_tokens <= 0 or temperature < 0.
  void validate() const;
};

struct Usage {
  int prompt_tokens = 0;
  int output_tokens = 0;
};

struct CompletionResponse {
  std::string text;
  bool from_cache = false;
  std::int64_t latency_ms = 0;
  std::optional<Usage> usage;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { Network, RateLimited, Auth, MalformedResponse, BadRequest, Config };

  BackendError(Kind kind, const std::string& message, std::optional<std::int64_t> retry_after_ms = std::nullopt)
      : std::runtime_error(message), kind_(kind), retry_after_ms_(retry_after_ms) {}

  Kind kind() const noexcept { return kind_; }
  bool retriable() const noexcept { return kind_ == Kind::Network || kind_ == Kind::RateLimited; }
  std::optional<std::int64_t> retry_after_ms() const noexcept { return retry_after_ms_; }

 private:
  Kind kind_;
  std::optional<std::int64_t> retry_after_ms_;
};

std::string error_kind_name(BackendError::Kind kind);

/// A completion provider. Implementations must allow concurrent complete() calls.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
};

using BackendPtr = std::shared_ptr<CompletionBackend>;

/// Counts requests passing through and how many were served from cache.
class CountingBackend final : public CompletionBackend {
 public:
  explicit CountingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return inner_->id(); }

  long calls() const noexcept { return calls_.load(); }
  long cache_hits() const noexcept { return cache_hits_.load(); }
  long live_calls() const noexcept { return calls_.load() - cache_hits_.load(); }

 private:
  BackendPtr inner_;
  std::atomic<long> calls_{0};
  std::atomic<long> cache_hits_{0};
};

/// Backend defined by a callable; used for scripted tests and Python backends.
class FunctionBackend final : public CompletionBackend {
 public:
  using Fn = std::function<std::string(const CompletionRequest&)>;
  FunctionBackend(Fn fn, std::string id) : fn_(std::move(fn)), id_(std::move(id)) {}

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return id_; }

 private:
  Fn fn_;
  std::string id_;
};

class ResponseCache;

/// Consults the cache before the inner backend and stores what it returns.
class CachedBackend final : public CompletionBackend {
 public:
  CachedBackend(BackendPtr inner, std::shared_ptr<ResponseCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  CompletionResponse complete(const CompletionRequest& request) override;
  std::string id() const override { return inner_->id(); }

  long live_calls() const noexcept { return live_calls_.load(); }

 private:
  BackendPtr inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<long> live_calls_{0};
};

}  // namespace ecsp
