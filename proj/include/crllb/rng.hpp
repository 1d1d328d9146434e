#pragma once

// xoshiro256** (Blackman & Vigna) seeded through splitmix64. The generator is
// specified bit-for-bit so that draws are reproducible across
// implementations:
//
//   splitmix64: s += 0x9e3779b97f4a7c15;
//               z = (s ^ (s >> 30)) * 0xbf58476d1ce4e5b9;
//               z = (z ^ (z >> 27)) * 0x94d049bb133111eb;  return z ^ (z >> 31)
//   output:     rotl(s1 * 5, 7) * 9
//   uniform:    (next() >> 11) * 2^-53, in [0, 1)
//   normal:     Box-Muller on (1 - u1, u2), both values used
//
// Stream k of a seed is the seeded state advanced by k calls of jump()
// (2^128 steps each).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "crllb/linalg.hpp"

namespace crllb {

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
    for (std::uint64_t k = 0; k < stream; ++k) jump();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  void jump() {
    static constexpr std::array<std::uint64_t, 4> kJump = {
        0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL, 0xa9582618e03fc9aaULL,
        0x39abdc4529b1661cULL};
    std::array<std::uint64_t, 4> acc{};
    for (std::uint64_t word : kJump) {
      for (int b = 0; b < 64; ++b) {
        if (word & (std::uint64_t{1} << b)) {
          for (int i = 0; i < 4; ++i) acc[i] ^= s_[i];
        }
        (*this)();
      }
    }
    s_ = acc;
  }

  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform point in the n-ball of the given radius centred at the origin.
  Vector uniform_in_ball(std::size_t n, double radius) {
    Vector d(n);
    double len = 0.0;
    do {
      for (std::size_t i = 0; i < n; ++i) d[i] = normal();
      len = norm(d);
    } while (len == 0.0);
    const double r = radius * std::pow(uniform(), 1.0 / static_cast<double>(n));
    return d * (r / len);
  }

  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace crllb
