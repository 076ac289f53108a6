#pragma once
// Deterministic random source. std::mt19937 with standard distributions is
// implementation-defined across library versions, so sampling is hand-rolled
// on top of splitmix64 to keep datasets reproducible everywhere.

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ravenkit {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Inclusive range, rejection-sampled so every value is equally likely.
  int uniform_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return lo + static_cast<int>(r % span);
  }

  double uniform_double() {  // [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool chance(double p) { return uniform_double() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    if (v.empty()) throw std::invalid_argument("pick: empty vector");
    return v[static_cast<std::size_t>(uniform_int(0, static_cast<int>(v.size()) - 1))];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(0, i);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  template <typename T>
  std::vector<T> sample(const std::vector<T>& v, int k) {  // without replacement
    if (k > static_cast<int>(v.size())) throw std::invalid_argument("sample: k too large");
    std::vector<T> pool = v;
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      int j = uniform_int(0, static_cast<int>(pool.size()) - 1);
      out.push_back(pool[static_cast<std::size_t>(j)]);
      pool.erase(pool.begin() + j);
    }
    return out;
  }

 private:
  std::uint64_t state_;
};

// Child streams derived this way are independent of evaluation order, so
// parallel and serial generation produce identical datasets.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  Rng mix(master ^ (0xA0761D6478BD642Full + index * 0xE7037ED1A0B428DBull));
  mix.next_u64();
  return mix.next_u64();
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x00000100000001B3ull;
  }
  return h;
}

}  // namespace ravenkit
