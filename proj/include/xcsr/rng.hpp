#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace xcsr {

/// Deterministic sampling on top of std::mt19937_64. The standard fixes that
/// engine's output sequence, and every recipe here (bounded integers,
/// Poisson, byte fill, Floyd sampling) is spelled out explicitly instead of
/// using the library distributions, whose algorithms are implementation
/// defined. Identical seeds therefore produce identical datasets on every
/// platform.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : eng_(seed) {}

  /// Raw 64-bit engine word.
  std::uint64_t next() { return eng_(); }

  /// Uniform integer in [lo, hi], rejection sampled to remove modulo bias.
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Poisson sample by Knuth's product method.
  std::uint64_t poisson(double mean);

  void fill_bytes(std::span<std::uint8_t> out);

  /// k distinct values from [0, population), ascending (Floyd's algorithm).
  std::vector<std::uint64_t> sample_sorted(std::uint64_t population,
                                           std::uint64_t k);

 private:
  std::mt19937_64 eng_;
};

/// e^{-x} for x >= 0 by fixed-order series evaluation; bit-stable across
/// platforms, unlike libm's exp.
double exp_neg(double x);

}  // namespace xcsr
