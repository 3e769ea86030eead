#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "shapereg/inference.hpp"
#include "shapereg/spline.hpp"
#include "shapereg/types.hpp"

namespace shapereg {

/// FNV-1a over the bit patterns of x.
std::uint64_t design_hash(std::span<const double> x);

/// Everything the null mixing distribution depends on. order == 0 marks
/// the classical (unsmoothed) cone.
struct MixingKey {
  std::size_t n = 0;
  std::uint64_t x_hash = 0;
  Shape shape = Shape::kIncreasing;
  int order = 0;
  int knots = 0;
  KnotPlacement placement = KnotPlacement::kQuantile;
  std::uint64_t nsim = 0;
  std::uint64_t seed = 0;

  std::string describe() const;
  std::string filename() const;
};

/// Directory of plain-text mixing distributions, one file per key.
class MixingCache {
 public:
  explicit MixingCache(std::filesystem::path dir);

  /// SHAPEREG_CACHE_DIR, else $XDG_CACHE_HOME/shapereg, else ~/.cache/shapereg.
  static std::optional<std::filesystem::path> default_dir();

  std::optional<MixingDistribution> load(const MixingKey& key) const;
  /// Writes atomically (temp file + rename); throws NumericalError on failure.
  std::filesystem::path store(const MixingKey& key, const MixingDistribution& mix) const;
  std::filesystem::path path_for(const MixingKey& key) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct MixingLookup {
  MixingDistribution mix;
  bool cache_hit = false;
  std::string path;
};

/// Cache lookup, falling back to simulation (and storing) on a miss.
MixingLookup cached_mixing(const MixingCache* cache, const MixingKey& key, const ConeBasis& cone);

}  // namespace shapereg
