#ifndef SMOLCIRCLE_RNG_HPP
#define SMOLCIRCLE_RNG_HPP

#include <cmath>
#include <cstdint>

// Counter-based randomness: every draw is a pure function of
// (seed, tag, counters). Draws are keyed by particle / pair identity, so
// simulations are reproducible bit-for-bit regardless of thread scheduling
// and stay invariant under consistent relabelings of the particles.

namespace smolcircle::rng {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Tag : std::uint64_t {
  InitPosition = 1,
  InitMass = 2,
  Gaussian = 3,
  PairThin = 4,
  PairOrder = 5,
};

// two finalizer rounds over a multiplicative field combine; the pair sweep
// draws one of these per candidate pair, so the combine stays cheap
inline std::uint64_t keyed(std::uint64_t seed, Tag tag, std::uint64_t a,
                           std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = seed ^ 0x6a09e667f3bcc909ULL;
  h ^= static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ULL;
  h ^= a * 0xc2b2ae3d27d4eb4fULL;
  h ^= b * 0x165667b19e3779f9ULL;
  h ^= c * 0x27d4eb2f165667c5ULL;
  return splitmix64(splitmix64(h));
}

// uniform in (0, 1]; never returns 0 so it is safe under log()
inline double to_uniform(std::uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, Tag tag, std::uint64_t a,
                      std::uint64_t b = 0, std::uint64_t c = 0) {
  return to_uniform(keyed(seed, tag, a, b, c));
}

// standard normal via Box-Muller on two keyed uniforms
inline double normal(std::uint64_t seed, Tag tag, std::uint64_t a,
                     std::uint64_t b = 0, std::uint64_t c = 0) {
  const std::uint64_t h1 = keyed(seed, tag, a, b, c);
  const std::uint64_t h2 = splitmix64(h1 ^ 0x94d049bb133111ebULL);
  const double u1 = to_uniform(h1);
  const double u2 = to_uniform(h2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline std::uint64_t replica_seed(std::uint64_t base_seed, std::uint64_t replica) {
  return splitmix64(base_seed ^ splitmix64(replica ^ 0x5851f42d4c957f2dULL));
}

}  // namespace smolcircle::rng

#endif
