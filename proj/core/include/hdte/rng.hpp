#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace hdte {

// One reproducible random stream. Distinct stream_index values under the same
// master seed yield statistically independent sequences, so Monte Carlo
// repetitions can run in any order (or in parallel) without changing results.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// murmur3 64-bit finalizer
inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdull;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ull;
  k ^= k >> 33;
  return k;
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Order-sensitive hash of a tuple of integers, used to derive stream indices
// for grid cells / repetitions so that any subset of a run is reproducible in
// isolation.
inline std::uint64_t stream_hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9d5c7f3a20e6b841ull;
  for (std::uint64_t v : parts) {
    h = detail::fmix64((h * 0x100000001b3ull) ^ detail::fmix64(v + 0x9e3779b97f4a7c15ull));
  }
  return h;
}

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64 so that nearby
// (master_seed, stream_index) pairs start from unrelated states. All sampling
// in this library goes through this generator rather than std::* distributions
// to keep results bit-identical across platforms and standard libraries.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(SeedSpec seed) {
    std::uint64_t sm =
        seed.master_seed ^ detail::fmix64(seed.stream_index + 0x6a09e667f3bcc909ull);
    for (auto& word : state_) word = detail::splitmix64(sm);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t operator()() {
    const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(operator()() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound). Modulo reduction: the bias is irrelevant at
  // Monte Carlo scale and the result is platform-independent.
  std::uint64_t next_below(std::uint64_t bound) { return operator()() % bound; }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ull; }

 private:
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace hdte
