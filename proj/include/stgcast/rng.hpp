#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stgcast {

/// One master seed fanned out into independent named sub-streams
/// ("init", "shuffle", "synthetic", ...), so adding a consumer never
/// perturbs the draws of another.
class SeedStreams {
 public:
  explicit SeedStreams(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64 stream(std::string_view name) const;

 private:
  std::uint64_t seed_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace stgcast
