#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "ecsp/backend.hpp"

namespace ecsp {

/// SHA-256 over (model_id, prompt, max_output_tokens, temperature, stop).
struct CacheKey {
  std::array<std::uint8_t, 32> digest{};

  std::string hex() const;
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

CacheKey make_cache_key(const CompletionRequest& request);

/// Hex SHA-256 of arbitrary bytes.
std::string sha256_hex(const std::string& data);

struct CacheStats {
  std::size_t entries = 0;
  std::uintmax_t bytes = 0;
};

/// Content-addressed completion cache on disk:
/// `<dir>/<first two hex digits>/<digest>.json` holding
/// {request, response, created_at}. Writes go to a temp file and are
/// renamed into place, so readers never observe a partial entry.
/// Storage failures are reported as warnings and treated as misses.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<CompletionResponse> get(const CacheKey& key) const;
  void put(const CacheKey& key, const CompletionRequest& request, const CompletionResponse& response);

  CacheStats stats() const;
  /// Removes every entry; returns how many were removed.
  std::size_t clear();

  std::filesystem::path entry_path(const CacheKey& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace ecsp
