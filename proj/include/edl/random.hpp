#pragma once

// Portable seeded randomness. The standard distributions are
// implementation-defined, so bounded draws and shuffles are done here on top
// of std::mt19937_64, whose output sequence is fixed by the standard.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace edl
{

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive mix of several words into one seed.
inline constexpr std::uint64_t hash_seed(std::initializer_list<std::uint64_t> parts)
{
  std::uint64_t h = 0x2545f4914f6cdd1dULL;
  for (auto p : parts)
    h = splitmix64(h ^ splitmix64(p));
  return h;
}

// FNV-1a, 64-bit.
class Fnv1a
{
public:
  Fnv1a &bytes(std::span<std::uint8_t const> data)
  {
    for (auto b : data)
    {
      h_ ^= b;
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a &u64(std::uint64_t v)
  {
    std::uint8_t buf[8];
    for (int i = 0; i < 8; ++i)
      buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return bytes(buf);
  }
  Fnv1a &f64(double v)
  {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof v);
    return u64(bits);
  }
  Fnv1a &str(std::string_view s)
  {
    u64(s.size());
    return bytes({reinterpret_cast<std::uint8_t const *>(s.data()), s.size()});
  }
  std::uint64_t digest() const { return h_; }

private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t index(std::uint64_t n)
  {
    if (n <= 1)
      return 0;
    std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do
      x = engine_();
    while (x >= limit);
    return x % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  template<typename T>
  void shuffle(std::vector<T> &v)
  {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[index(i)]);
  }

  std::vector<std::size_t> permutation(std::size_t n)
  {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    shuffle(p);
    return p;
  }

private:
  std::mt19937_64 engine_;
};

} // namespace edl
