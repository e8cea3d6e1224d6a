#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "bolab/eigensolve.hpp"

namespace bolab {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

/// Memoization of eigensolver results keyed by a canonical text naming the
/// operator, grid and solver parameters.
class ResultCache {
 public:
  virtual ~ResultCache() = default;
  virtual std::optional<EigenResult> find(const std::string& key_text) = 0;
  virtual void store(const std::string& key_text, const EigenResult& result) = 0;
};

/// One JSON file per entry named by the FNV-1a hash of the key text. The key
/// text is stored too, so hash collisions read as misses. Writes go to a
/// temporary file that is then renamed into place.
class DiskCache final : public ResultCache {
 public:
  explicit DiskCache(std::filesystem::path directory);

  std::optional<EigenResult> find(const std::string& key_text) override;
  void store(const std::string& key_text, const EigenResult& result) override;

  const std::filesystem::path& directory() const noexcept { return dir_; }

  struct Stats {
    std::size_t entries = 0;
    std::uintmax_t bytes = 0;
  };
  Stats stats() const;
  std::size_t clear();

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Text serialization used by the disk cache. Doubles are written with 17
/// significant digits, so a round trip is bit-identical.
std::string serialize_result(const std::string& key_text, const EigenResult& result);
/// Returns nothing when the text is malformed or carries a different key.
std::optional<EigenResult> deserialize_result(const std::string& text, const std::string& key_text);

/// Returns the cached result for the key or computes and stores it. A null
/// cache just computes.
EigenResult memoize(ResultCache* cache, const std::string& key_text, const std::function<EigenResult()>& compute);

/// Canonical text of solver parameters for cache keys.
std::string describe(const IterativeOptions& options);

}  // namespace bolab
