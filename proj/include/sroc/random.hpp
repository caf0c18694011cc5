#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace sroc {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view text);

// Seed streams: stream(master, tag, index) = splitmix64(splitmix64(master ^ fnv1a(tag)) + index).
// Each (tag, index) pair names an independent stream, so jobs can draw in any order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

// mt19937_64 with hand-rolled distributions; the std:: distributions are
// implementation-defined and would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);
  // Uniform double in [0, 1).
  double uniform01();
  double normal();

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
    }
  }

  // Random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// floor(ratio * n) with a small guard against representation error
// (0.29 * 100 evaluates to 28.999999999999996).
std::size_t fraction_count(double ratio, std::size_t n);

}  // namespace sroc
