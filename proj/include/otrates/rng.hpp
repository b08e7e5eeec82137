#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace otrates {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Folds a list of identifiers into a stream key. Order matters.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// Counter-based generator: the k-th output is a pure function of (key, k),
// so streams derived from distinct keys can be consumed on any thread.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(*this); }
  std::uint64_t below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(*this);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_;
};

}  // namespace otrates
