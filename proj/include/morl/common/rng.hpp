#ifndef MORL_COMMON_RNG_HPP_
#define MORL_COMMON_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace morl {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named stream families. Adding a family never shifts the others.
enum class Stream : std::uint64_t {
  kPhysics = 1,
  kPreference = 2,
  kSensor = 3,
  kPolicy = 4,
  kMinibatch = 5,
  kInit = 6,
  kTrial = 7,
  kImpulse = 8,
};

// Counter-based split: the seed of stream (family, index) depends only on
// the master seed and the pair, so changing the number of environments
// leaves every other stream untouched.
constexpr std::uint64_t stream_seed(std::uint64_t master, Stream family,
                                    std::uint64_t index = 0) {
  return mix64(mix64(master ^ mix64(static_cast<std::uint64_t>(family))) +
               index);
}

inline Rng make_rng(std::uint64_t master, Stream family,
                    std::uint64_t index = 0) {
  return Rng(stream_seed(master, family, index));
}

inline double uniform(Rng& rng, double lo, double hi) {
  // Explicit formula instead of std::uniform_real_distribution so the
  // stream is identical across standard library implementations.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller; one draw per call keeps the stream position predictable.
  double u1 = 0.0;
  do {
    u1 = uniform(rng, 0.0, 1.0);
  } while (u1 <= 0.0);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline void restore_rng(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
}

}  // namespace morl

#endif  // MORL_COMMON_RNG_HPP_
