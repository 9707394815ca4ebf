#pragma once

// Test-only reference computations. Nothing here calls into the library's
// CDF code paths.

#include <cmath>
#include <numbers>

namespace sysrisk::testing {

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// Midpoint Riemann sum of the bivariate normal density over
// [lower, z1] x [lower, z2] with step h.
inline double riemann_binorm_cdf(double z1, double z2, double rho, double h,
                                 double lower = -9.0) {
  const double det = 1.0 - rho * rho;
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
  const long nx = std::lround((z1 - lower) / h);
  const long ny = std::lround((z2 - lower) / h);
  const double hx = (z1 - lower) / static_cast<double>(nx);
  const double hy = (z2 - lower) / static_cast<double>(ny);
  double total = 0.0;
  for (long i = 0; i < nx; ++i) {
    const double x = lower + (static_cast<double>(i) + 0.5) * hx;
    double row = 0.0;
    for (long j = 0; j < ny; ++j) {
      const double y = lower + (static_cast<double>(j) + 0.5) * hy;
      row += std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det));
    }
    total += row;
  }
  return total * norm * hx * hy;
}

// Richardson-extrapolated midpoint sum (error O(h^4)).
inline double richardson_binorm_cdf(double z1, double z2, double rho, double h) {
  const double coarse = riemann_binorm_cdf(z1, z2, rho, h);
  const double fine = riemann_binorm_cdf(z1, z2, rho, h / 2.0);
  return (4.0 * fine - coarse) / 3.0;
}

// Small deterministic generator for randomized property checks.
class SplitMix64 {
 public:
  explicit SplitMix64(unsigned long long seed) : state_(seed) {}
  unsigned long long next() {
    unsigned long long z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<unsigned long long>(hi - lo + 1));
  }

 private:
  unsigned long long state_;
};

}  // namespace sysrisk::testing
