#pragma once

#include <cstdint>
#include <random>

namespace odeconv {

/// splitmix64 step; used to derive well-separated child seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic, seedable random stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() { return unif_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(engine_); }
  double normal() { return norm_(engine_); }
  double gamma(double shape, double scale) {
    std::gamma_distribution<double> g(shape, scale);
    return g(engine_);
  }
  double exponential(double rate) {
    std::exponential_distribution<double> e(rate);
    return e(engine_);
  }
  std::uint64_t raw() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// Derives independent streams keyed by indices (time step, particle,
/// replicate, ...) from one base seed. Assignment depends only on the
/// seed and the key, never on how much any stream has been consumed, so
/// concurrent work units get reproducible randomness.
class RngFactory {
 public:
  explicit RngFactory(std::uint64_t seed) : seed_(seed) {}

  RngStream stream(std::uint64_t a, std::uint64_t b = 0,
                   std::uint64_t c = 0) const {
    std::uint64_t s = seed_ ^ 0x5851F42D4C957F2DULL;
    s += a * 0xA24BAED4963EE407ULL;
    std::uint64_t z = splitmix64(s);
    s += b * 0x9FB21C651E98DF25ULL;
    z ^= splitmix64(s);
    s += c * 0xD6E8FEB86659FD93ULL;
    z ^= splitmix64(s);
    return RngStream(z);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace odeconv
