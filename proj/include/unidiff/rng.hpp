#pragma once

#include <cstdint>
#include <random>

namespace unidiff {

// splitmix64: used to derive well-separated engine seeds from (seed, stream id)
// so that parallel sample streams are reproducible regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One independent random stream, keyed by (seed, stream index).
// Stream 0, 1, 2, ... of the same seed never collide in practice.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

    std::mt19937_64& engine() { return engine_; }

    double normal(double sigma = 1.0) {
        return std::normal_distribution<double>(0.0, sigma)(engine_);
    }
    double uniform(double a, double b) {
        return std::uniform_real_distribution<double>(a, b)(engine_);
    }
    // Rademacher +-1
    double sign() { return (engine_() & 1u) ? 1.0 : -1.0; }

  private:
    std::mt19937_64 engine_;
};

} // namespace unidiff
