#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "prnu/plane.hpp"

namespace testsupport {

/// Seeded generator shared by the property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng); }

  prnu::Plane plane(int rows, int cols, double sd = 1.0) {
    prnu::Plane p(rows, cols);
    for (auto& v : p.values()) v = static_cast<float>(normal(sd));
    return p;
  }
  prnu::Plane uniform_plane(int rows, int cols, double lo, double hi) {
    prnu::Plane p(rows, cols);
    for (auto& v : p.values()) v = static_cast<float>(uniform(lo, hi));
    return p;
  }
};

inline double plane_mean(const prnu::Plane& p) {
  double s = 0.0;
  for (float v : p.values()) s += v;
  return s / double(p.size());
}

inline double plane_var(const prnu::Plane& p) {
  const double m = plane_mean(p);
  double s = 0.0;
  for (float v : p.values()) s += (v - m) * (v - m);
  return s / double(p.size());
}

/// Pearson correlation over all pixels.
inline double corr(const prnu::Plane& a, const prnu::Plane& b) {
  const double ma = plane_mean(a), mb = plane_mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.values()[i] - ma, y = b.values()[i] - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  return sab / std::sqrt(saa * sbb);
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

}  // namespace testsupport
