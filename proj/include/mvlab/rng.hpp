#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mvlab {

// Philox4x32-10 counter-based generator.
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.
namespace philox {

constexpr uint32_t kW32A = 0x9E3779B9u;
constexpr uint32_t kW32B = 0xBB67AE85u;
constexpr uint32_t kM4x32A = 0xD2511F53u;
constexpr uint32_t kM4x32B = 0xCD9E8D57u;

inline void round_once(std::array<uint32_t, 4>& ctr, std::array<uint32_t, 2>& key) {
  const uint64_t p0 = static_cast<uint64_t>(kM4x32A) * ctr[0];
  const uint64_t p1 = static_cast<uint64_t>(kM4x32B) * ctr[2];
  const std::array<uint32_t, 4> out = {
      static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
      static_cast<uint32_t>(p1),
      static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
      static_cast<uint32_t>(p0)};
  ctr = out;
  key[0] += kW32A;
  key[1] += kW32B;
}

inline std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) round_once(ctr, key);
  return ctr;
}

}  // namespace philox

// SplitMix64 finalizer (Steele/Lea/Flood 2014); used to derive sub-seeds.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t salt) {
  return splitmix64(base ^ splitmix64(salt));
}

// Logical substreams so that different uses of the same seed never collide.
enum RngStream : uint32_t {
  kStreamDynamics = 0,   // Brownian increments of a simulation
  kStreamInit = 1,       // initial-cloud sampling
  kStreamBootstrap = 2,  // bootstrap resampling indices
  kStreamOracle = 3,     // oracle sampling (Gaussians, inverse-CDF draws)
};

// Stateless stream of U(0,1)/N(0,1) draws addressed by (entity, step, slot).
// Identical addresses give identical draws, so parallel execution is
// reproducible and synchronous couplings share noise exactly.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint32_t stream = kStreamDynamics)
      : seed_(seed), stream_(stream) {}

  // uniform in the open interval (0,1)
  double uniform(uint64_t entity, uint64_t step, uint32_t slot) const {
    const auto r = raw(entity, step, slot);
    return to_unit(r[0], r[1]);
  }

  double normal(uint64_t entity, uint64_t step, uint32_t slot) const {
    const auto r = raw(entity, step, slot >> 1);
    double z0, z1;
    box_muller(r, z0, z1);
    return (slot & 1u) ? z1 : z0;
  }

  // n independent standard normals for one (entity, step) address
  void fill_normals(uint64_t entity, uint64_t step, double* out, int n) const {
    for (int k = 0; k < n; k += 2) {
      const auto r = raw(entity, step, static_cast<uint32_t>(k >> 1));
      double z0, z1;
      box_muller(r, z0, z1);
      out[k] = z0;
      if (k + 1 < n) out[k + 1] = z1;
    }
  }

  uint64_t seed() const { return seed_; }
  uint32_t stream() const { return stream_; }

 private:
  std::array<uint32_t, 4> raw(uint64_t entity, uint64_t step, uint32_t block_index) const {
    const std::array<uint32_t, 4> ctr = {
        static_cast<uint32_t>(entity), static_cast<uint32_t>(entity >> 32),
        static_cast<uint32_t>(step), block_index};
    const std::array<uint32_t, 2> key = {
        static_cast<uint32_t>(seed_) ^ (stream_ * 0x85EBCA6Bu),
        static_cast<uint32_t>(seed_ >> 32)};
    return philox::block(ctr, key);
  }

  // two 32-bit words -> double in (0,1), 53 significant bits
  static double to_unit(uint32_t hi, uint32_t lo) {
    const uint64_t v = (static_cast<uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(v >> 11) + 0.5) * 0x1p-53;
  }

  static void box_muller(const std::array<uint32_t, 4>& r, double& z0, double& z1) {
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    z0 = rad * std::cos(ang);
    z1 = rad * std::sin(ang);
  }

  uint64_t seed_;
  uint32_t stream_;
};

}  // namespace mvlab
