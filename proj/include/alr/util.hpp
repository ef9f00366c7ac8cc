// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

namespace alr {

class numeric_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class config_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class parse_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class invariant_violation : public std::logic_error {
  using std::logic_error::logic_error;
};

// Draws below are spelled out instead of using <random> distributions, whose
// output is implementation-defined. Same seed, same stream, everywhere.

inline double uniform_unit(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform_in(std::mt19937_64& g, double lo, double hi) {
  return lo + uniform_unit(g) * (hi - lo);
}

inline double gaussian(std::mt19937_64& g) {
  // Box-Muller; fresh pair per sample so copies of the engine stay in sync.
  const double u1 = 1.0 - uniform_unit(g);  // (0, 1]
  const double u2 = uniform_unit(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
}

inline void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& g) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(g() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::vector<double>& v, std::uint64_t seed = 0xcbf29ce484222325ull) {
  return v.empty() ? seed : fnv1a64(v.data(), v.size() * sizeof(double), seed);
}

}  // namespace alr
