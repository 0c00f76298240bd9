#ifndef CRTGEE_RNG_HPP
#define CRTGEE_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace crtgee {

// splitmix64 finalizer, used to expand seeds and to hash stream keys.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based substream RNG: a (master_seed, rep_index, stream_tag) key is
// hashed through splitmix64 into the state of a xoshiro256++ generator, so
// every replication/stream pair is an independent, order-free stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64_next(s);
  }

  static Rng substream(std::uint64_t master_seed, std::uint64_t rep_index,
                       std::uint64_t stream_tag) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64_next(s);
    s = a ^ (rep_index + 0x9E3779B97F4A7C15ULL);
    std::uint64_t b = splitmix64_next(s);
    s = b ^ (stream_tag + 0xD1B54A32D192ED03ULL);
    return Rng(splitmix64_next(s));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second deviate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Knuth multiplication method; adequate for the cluster-size means used here.
  long poisson(double mean) {
    if (!(mean > 0.0) || mean > 600.0)
      throw std::invalid_argument("poisson: mean out of supported range");
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace crtgee

#endif
