#pragma once

#include <cstdint>
#include <initializer_list>

// Deterministic random number generation for the simulator.
//
// Every user owns an independent xoshiro256++ stream whose state is filled
// from a splitmix64 sequence keyed by the run seed, so draws made by one user
// never perturb another user's stream and identical (config, seed) pairs
// replay bit for bit on any platform.

namespace fdmac {

// splitmix64 step: advances *state and returns the next scrambled output.
inline std::uint64_t splitmix64_next(std::uint64_t* state) {
  std::uint64_t z = (*state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Xoshiro256pp {
 public:
  Xoshiro256pp() : Xoshiro256pp(0) {}

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(&sm);
  }

  // Seeds user `index` of a run: state words are taken from the run-level
  // splitmix64 sequence at offset 4*index.
  static Xoshiro256pp for_user(std::uint64_t run_seed, int index) {
    std::uint64_t sm = run_seed;
    for (int i = 0; i < 4 * index; ++i) splitmix64_next(&sm);
    Xoshiro256pp g(0);
    for (auto& word : g.state_) word = splitmix64_next(&sm);
    return g;
  }

  std::uint64_t next() {
    const std::uint64_t out = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return out;
  }

  // Uniform double in [0, 1), 53 significant bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound); bound >= 1.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

// Stable seed derivation for sweeps: folds a sequence of labels into a base
// seed so each (experiment, point, mode, replication) gets its own stream.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64_next(&s);
  for (std::uint64_t p : parts) {
    s = h ^ p;
    h = splitmix64_next(&s);
  }
  return h;
}

}  // namespace fdmac
