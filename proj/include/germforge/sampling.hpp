#pragma once

// Deterministic point sets and seeded random numbers.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "germforge/error.hpp"

namespace germforge {

using Point = std::vector<double>;

/// Seeded generator. Uniform variates are built directly from the 64-bit
/// engine output so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
  }
  std::uint64_t next() { return engine_(); }

  /// Uniform point in the open ball of the given radius.
  Point in_ball(int dim, double radius) {
    Point p(static_cast<std::size_t>(dim));
    while (true) {
      double n2 = 0.0;
      for (auto& x : p) {
        x = uniform(-1.0, 1.0);
        n2 += x * x;
      }
      if (n2 < 1.0) break;
    }
    for (auto& x : p) x *= radius;
    return p;
  }

  /// Uniform direction on the unit sphere.
  Point direction(int dim) {
    Point p(static_cast<std::size_t>(dim));
    double n2 = 0.0;
    while (n2 < 1e-12) {
      n2 = 0.0;
      for (auto& x : p) {
        x = normal();
        n2 += x * x;
      }
    }
    const double n = std::sqrt(n2);
    for (auto& x : p) x /= n;
    return p;
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {
inline double radical_inverse(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
  }
  return r;
}
}  // namespace detail

/// Halton points inside the ball B_radius (rejection from the cube), always
/// including the centre first.
inline std::vector<Point> halton_ball(int dim, double radius, std::size_t count) {
  static constexpr std::array<int, 8> primes{2, 3, 5, 7, 11, 13, 17, 19};
  if (dim < 1 || dim > 8) throw InputError("halton_ball supports dimensions 1..8");
  std::vector<Point> pts;
  pts.reserve(count);
  pts.push_back(Point(static_cast<std::size_t>(dim), 0.0));
  for (std::uint64_t i = 1; pts.size() < count; ++i) {
    Point p(static_cast<std::size_t>(dim));
    double n2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      p[static_cast<std::size_t>(k)] = 2.0 * detail::radical_inverse(i, primes[static_cast<std::size_t>(k)]) - 1.0;
      n2 += p[static_cast<std::size_t>(k)] * p[static_cast<std::size_t>(k)];
    }
    if (n2 >= 1.0) continue;
    for (auto& x : p) x *= radius;
    pts.push_back(std::move(p));
  }
  return pts;
}

inline double norm(const Point& p) {
  double s = 0.0;
  for (double x : p) s += x * x;
  return std::sqrt(s);
}

/// Point at the given distance from the origin along a fixed direction.
inline Point at_radius(int dim, double radius, std::uint64_t salt = 0) {
  Point p(static_cast<std::size_t>(dim));
  double n2 = 0.0;
  for (int k = 0; k < dim; ++k) {
    p[static_cast<std::size_t>(k)] = 1.0 + 0.37 * k + 0.11 * static_cast<double>(salt % 7) * (k % 2 == 0 ? 1 : -1);
    n2 += p[static_cast<std::size_t>(k)] * p[static_cast<std::size_t>(k)];
  }
  const double s = radius / std::sqrt(n2);
  for (auto& x : p) x *= s;
  return p;
}

}  // namespace germforge
