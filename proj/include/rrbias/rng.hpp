#pragma once

// Counter-based random streams.
//
// A stream is identified by a 64-bit key. Its i-th output is
// splitmix64_finalize(key + i * 0x9E3779B97F4A7C15), so a stream is a pure
// function of (key, position) and needs no shared state. Child streams are
// derived by hashing (key, index) with a different increment, which makes
// per-cell / per-replicate / per-cluster streams independent of evaluation
// order and worker count. All samplers below are written out explicitly
// (no <random> distributions) so draws are bit-identical across platforms.

#include <cstddef>
#include <cstdint>
#include <initializer_list>

namespace rrbias {

constexpr std::uint64_t splitmix64_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of child stream `index` under `key`.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t index) noexcept {
  return splitmix64_finalize(splitmix64_finalize(key ^ 0x6A09E667F3BCC909ULL) +
                             (index + 1) * 0xD1B54A32D192ED03ULL);
}

/// Folds a path of indices: derive_key(derive_key(key, i0), i1) ...
constexpr std::uint64_t derive_key(std::uint64_t key,
                                   std::initializer_list<std::uint64_t> path) noexcept {
  for (std::uint64_t i : path) key = derive_key(key, i);
  return key;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return splitmix64_finalize(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1].
  double uniform_open_low() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Exponential waiting time with the given rate (> 0).
  double exponential(double rate);

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Unbiased integer in [0, n), n > 0.
  std::size_t uniform_index(std::size_t n) noexcept;

  std::uint64_t poisson(double mean);

  RandomStream child(std::uint64_t index) const noexcept {
    return RandomStream(derive_key(key_, index));
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rrbias
