#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace sabre {

// Independent seeded stream. Streams are derived from a master seed and a
// stream id so that per-client streams never overlap and results do not
// depend on the order clients are processed in.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : engine_(mix(master_seed, stream_id)) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean, double stddev) {
    // One engine draw pair per call; avoids the cached-spare state of
    // std::normal_distribution so call sites stay order-independent.
    double u1 = std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    double u2 = std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    if (u1 <= 0.0) u1 = std::numeric_limits<double>::min();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925287 * u2);
  }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t id) {
    // splitmix64 over (seed, id)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace sabre
