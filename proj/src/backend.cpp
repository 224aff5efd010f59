#include "ecsp/backend.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "ecsp/cache.hpp"
#include "ecsp/log.hpp"

namespace ecsp {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warning};
std::mutex g_log_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }

void log_warning(const std::string& message) {
  if (g_level.load() == LogLevel::Quiet) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << message << '\n';
}

void log_info(const std::string& message) {
  if (g_level.load() != LogLevel::Info) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << message << '\n';
}

std::string kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::Segment: return "SEGMENT";
    case PromptKind::Ambiguity: return "AMBIGUITY";
    case PromptKind::Select: return "SELECT";
    case PromptKind::Decontext: return "DECONTEXT";
    case PromptKind::Vanilla: return "VANILLA";
  }
  return "SEGMENT";
}

std::string error_kind_name(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::Network: return "NetworkError";
    case BackendError::Kind::RateLimited: return "RateLimited";
    case BackendError::Kind::Auth: return "AuthError";
    case BackendError::Kind::MalformedResponse: return "MalformedResponse";
    case BackendError::Kind::BadRequest: return "BadRequest";
    case BackendError::Kind::Config: return "ConfigError";
  }
  return "BackendError";
}

void CompletionRequest::validate() const {
  if (max_output_tokens <= 0) throw std::invalid_argument("max_output_tokens must be positive");
  if (temperature < 0.0) throw std::invalid_argument("temperature must be non-negative");
}

CompletionResponse CountingBackend::complete(const CompletionRequest& request) {
  ++calls_;
  CompletionResponse response = inner_->complete(request);
  if (response.from_cache) ++cache_hits_;
  return response;
}

CompletionResponse FunctionBackend::complete(const CompletionRequest& request) {
  request.validate();
  CompletionResponse response;
  response.text = fn_(request);
  return response;
}

CompletionResponse CachedBackend::complete(const CompletionRequest& request) {
  const CacheKey key = make_cache_key(request);
  const auto started = std::chrono::steady_clock::now();
  if (auto hit = cache_->get(key)) {
    hit->from_cache = true;
    hit->latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return *hit;
  }
  ++live_calls_;
  CompletionResponse response = inner_->complete(request);
  response.from_cache = false;
  cache_->put(key, request, response);
  return response;
}

// ---------------------------------------------------------------------------
// Cache

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string CacheKey::hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

CacheKey make_cache_key(const CompletionRequest& request) {
  char temp[32];
  std::snprintf(temp, sizeof temp, "%.17g", request.temperature);
  nlohmann::json canonical = nlohmann::json::array(
      {request.model_id, request.prompt, request.max_output_tokens, std::string(temp),
       request.stop ? nlohmann::json(*request.stop) : nlohmann::json(nullptr)});
  const std::string bytes = canonical.dump();
  CacheKey key;
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), key.digest.data(), &len, EVP_sha256(), nullptr);
  return key;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) log_warning("cache directory " + dir_.string() + " unavailable: " + ec.message());
}

std::filesystem::path ResponseCache::entry_path(const CacheKey& key) const {
  const std::string hex = key.hex();
  return dir_ / hex.substr(0, 2) / (hex + ".json");
}

std::optional<CompletionResponse> ResponseCache::get(const CacheKey& key) const {
  const auto path = entry_path(key);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const auto entry = nlohmann::json::parse(in);
    CompletionResponse response;
    response.text = entry.at("response").at("text").get<std::string>();
    response.from_cache = true;
    if (entry["response"].contains("usage") && !entry["response"]["usage"].is_null()) {
      const auto& u = entry["response"]["usage"];
      response.usage = Usage{u.value("prompt_tokens", 0), u.value("output_tokens", 0)};
    }
    return response;
  } catch (const std::exception& e) {
    log_warning("unreadable cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::atomic<unsigned long> g_temp_counter{0};

}  // namespace

void ResponseCache::put(const CacheKey& key, const CompletionRequest& request, const CompletionResponse& response) {
  const auto path = entry_path(key);
  nlohmann::json entry;
  entry["request"] = {{"model_id", request.model_id},
                      {"prompt", request.prompt},
                      {"max_output_tokens", request.max_output_tokens},
                      {"temperature", request.temperature},
                      {"stop", request.stop ? nlohmann::json(*request.stop) : nlohmann::json(nullptr)},
                      {"kind", kind_name(request.kind)}};
  entry["response"] = {{"text", response.text}, {"latency_ms", response.latency_ms}};
  if (response.usage) {
    entry["response"]["usage"] = {{"prompt_tokens", response.usage->prompt_tokens},
                                  {"output_tokens", response.usage->output_tokens}};
  }
  entry["created_at"] = utc_timestamp();

  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    log_warning("cannot create cache shard " + path.parent_path().string() + ": " + ec.message());
    return;
  }
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << '.'
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << g_temp_counter++;
  const auto tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << entry.dump();
    out.flush();
    if (!out) {
      log_warning("cannot write cache entry " + tmp.string());
      std::filesystem::remove(tmp, ec);
      return;
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    log_warning("cannot publish cache entry " + path.string() + ": " + ec.message());
    std::filesystem::remove(tmp, ec);
  }
}

CacheStats ResponseCache::stats() const {
  CacheStats s;
  std::error_code ec;
  if (!std::filesystem::exists(dir_, ec)) return s;
  for (auto it = std::filesystem::recursive_directory_iterator(dir_, ec);
       !ec && it != std::filesystem::recursive_directory_iterator(); it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".json") {
      ++s.entries;
      s.bytes += it->file_size();
    }
  }
  return s;
}

std::size_t ResponseCache::clear() {
  std::size_t removed = 0;
  std::error_code ec;
  if (!std::filesystem::exists(dir_, ec)) return 0;
  for (const auto& shard : std::filesystem::directory_iterator(dir_, ec)) {
    if (!shard.is_directory()) continue;
    for (const auto& entry : std::filesystem::directory_iterator(shard.path(), ec)) {
      if (entry.path().extension() == ".json") ++removed;
    }
    std::filesystem::remove_all(shard.path(), ec);
  }
  return removed;
}

}  // namespace ecsp
