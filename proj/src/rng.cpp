#include "xcsr/rng.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace xcsr {

std::uint64_t DetRng::uniform(std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi) throw std::invalid_argument("uniform: lo > hi");
  const std::uint64_t range = hi - lo + 1;  // 0 means the full 2^64 range
  if (range == 0) return next();
  if (range == 1) return lo;
  const std::uint64_t rem = (0 - range) % range;  // 2^64 mod range
  std::uint64_t v = next();
  if (rem != 0) {
    const std::uint64_t bound = 0 - rem;  // largest multiple of range
    while (v >= bound) v = next();
  }
  return lo + v % range;
}

std::uint64_t DetRng::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
  const double threshold = exp_neg(mean);
  std::uint64_t k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= unit();
  } while (p > threshold);
  return k - 1;
}

void DetRng::fill_bytes(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = next();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word);
      word >>= 8;
    }
  }
}

std::vector<std::uint64_t> DetRng::sample_sorted(std::uint64_t population,
                                                 std::uint64_t k) {
  if (k > population)
    throw std::invalid_argument("sample_sorted: k exceeds population");
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = population - k; j < population; ++j) {
    const std::uint64_t t = uniform(0, j);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

double exp_neg(double x) {
  if (x < 0.0) throw std::invalid_argument("exp_neg: negative argument");
  // e^x = e^n * e^f with n = floor(x), f in [0, 1); both factors evaluated
  // with a fixed operation order.
  const double e = 2.718281828459045235360287471352662498;
  const std::uint64_t n = static_cast<std::uint64_t>(x);
  const double f = x - static_cast<double>(n);
  double en = 1.0;
  for (std::uint64_t i = 0; i < n; ++i) en *= e;
  double sum = 1.0;
  double term = 1.0;
  for (int k = 1; k < 64; ++k) {
    term *= f / static_cast<double>(k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return 1.0 / (en * sum);
}

}  // namespace xcsr
