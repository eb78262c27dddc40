#pragma once

// Shared helpers for the unit tests: seeded generators and small oracles.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "halfline/spectral.hpp"

namespace testing {

using halfline::Coeffs;
using halfline::cplx;

inline std::mt19937& rng() {
  static std::mt19937 gen(20240611u);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

inline Coeffs random_coeffs(std::size_t M, double scale = 1.0, std::size_t first = 0) {
  Coeffs c(M + 1);
  for (std::size_t n = first; n <= M; ++n) c[n] = {uniform(-scale, scale), uniform(-scale, scale)};
  return c;
}

inline Coeffs delta(std::size_t M, std::size_t n, cplx a = 1.0) {
  Coeffs c(M + 1);
  c[n] = a;
  return c;
}

inline double max_diff(const Coeffs& a, const Coeffs& b) {
  double d = 0.0;
  for (std::size_t n = 0; n < a.size() && n < b.size(); ++n) d = std::max(d, std::abs(a[n] - b[n]));
  return d;
}

inline double max_abs(const Coeffs& a) {
  double d = 0.0;
  for (const auto& x : a) d = std::max(d, std::abs(x));
  return d;
}

}  // namespace testing
