#include "shapereg/mixing_cache.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace shapereg {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(const unsigned char* p, std::size_t len, std::uint64_t h = kFnvOffset) {
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

constexpr const char* kMagic = "shapereg-mixing 1";

}  // namespace

std::uint64_t design_hash(std::span<const double> x) {
  std::uint64_t h = kFnvOffset;
  for (double v : x) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    h = fnv1a(bytes, 8, h);
  }
  return h;
}

std::string MixingKey::describe() const {
  std::ostringstream s;
  s << "n=" << n << ";x=" << hex(x_hash) << ";shape=" << to_string(shape)
    << ";order=" << order << ";knots=" << knots
    << ";placement=" << (placement == KnotPlacement::kQuantile ? "quantile" : "equal")
    << ";nsim=" << nsim << ";seed=" << seed;
  return s.str();
}

std::string MixingKey::filename() const {
  const std::string d = describe();
  return "mixing-" + hex(fnv1a(reinterpret_cast<const unsigned char*>(d.data()), d.size())) +
         ".txt";
}

MixingCache::MixingCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<std::filesystem::path> MixingCache::default_dir() {
  if (const char* env = std::getenv("SHAPEREG_CACHE_DIR"); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
    return std::filesystem::path(xdg) / "shapereg";
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "shapereg";
  }
  return std::nullopt;
}

std::filesystem::path MixingCache::path_for(const MixingKey& key) const {
  return dir_ / key.filename();
}

std::optional<MixingDistribution> MixingCache::load(const MixingKey& key) const {
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  std::string magic, keyline;
  std::getline(in, magic);
  std::getline(in, keyline);
  if (magic != kMagic || keyline != "key " + key.describe()) return std::nullopt;
  std::string tag;
  int r = 0;
  std::size_t size = 0;
  if (!(in >> tag >> r) || tag != "r") return std::nullopt;
  if (!(in >> tag >> size) || tag != "counts") return std::nullopt;
  std::vector<std::uint64_t> counts(size);
  for (auto& c : counts) {
    if (!(in >> c)) return std::nullopt;
  }
  try {
    return MixingDistribution::from_counts(std::move(counts), key.seed, r);
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

std::filesystem::path MixingCache::store(const MixingKey& key, const MixingDistribution& mix) const {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw NumericalError("cannot create cache directory " + dir_.string() + ": " + ec.message());
  const auto target = path_for(key);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << kMagic << "\nkey " << key.describe() << "\nr " << mix.r << "\ncounts "
        << mix.counts.size() << "\n";
    for (std::size_t d = 0; d < mix.counts.size(); ++d) {
      out << mix.counts[d] << (d + 1 < mix.counts.size() ? ' ' : '\n');
    }
    if (!out) throw NumericalError("cannot write cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw NumericalError("cannot write cache file " + target.string() + ": " + ec.message());
  return target;
}

MixingLookup cached_mixing(const MixingCache* cache, const MixingKey& key, const ConeBasis& cone) {
  MixingLookup out;
  if (cache != nullptr) {
    if (auto hit = cache->load(key)) {
      out.mix = std::move(*hit);
      out.cache_hit = true;
      out.path = cache->path_for(key).string();
      return out;
    }
  }
  out.mix = mixing_distribution(cone, key.nsim, key.seed);
  if (cache != nullptr) out.path = cache->store(key, out.mix).string();
  return out;
}

}  // namespace shapereg
