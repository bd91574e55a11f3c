#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexcircle/errors.hpp"

namespace flexcircle {

// Closed interval with outward rounding: every result is widened by one ulp on
// each side, and libm results by two, so the true value is always enclosed.
struct Interval {
  double lo = 0, hi = 0;

  Interval() = default;
  Interval(double x) : lo(x), hi(x) {}  // NOLINT(google-explicit-constructor)
  Interval(double l, double h) : lo(l), hi(h) {}

  static double down(double x, int ulps = 1) {
    for (int i = 0; i < ulps; ++i) x = std::nextafter(x, -std::numeric_limits<double>::infinity());
    return x;
  }
  static double up(double x, int ulps = 1) {
    for (int i = 0; i < ulps; ++i) x = std::nextafter(x, std::numeric_limits<double>::infinity());
    return x;
  }
  static Interval widen(double l, double h, int ulps = 1) { return {down(l, ulps), up(h, ulps)}; }

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains_zero() const { return lo <= 0 && 0 <= hi; }

  friend Interval operator+(const Interval& x, const Interval& y) { return widen(x.lo + y.lo, x.hi + y.hi); }
  friend Interval operator-(const Interval& x, const Interval& y) { return widen(x.lo - y.hi, x.hi - y.lo); }
  friend Interval operator-(const Interval& x) { return {-x.hi, -x.lo}; }
  friend Interval operator*(const Interval& x, const Interval& y) {
    double a = x.lo * y.lo, b = x.lo * y.hi, c = x.hi * y.lo, d = x.hi * y.hi;
    return widen(std::min({a, b, c, d}), std::max({a, b, c, d}));
  }
  friend Interval operator/(const Interval& x, const Interval& y) {
    if (y.contains_zero()) throw CertificationFailedAtResolution("interval division by an interval containing 0");
    double a = x.lo / y.lo, b = x.lo / y.hi, c = x.hi / y.lo, d = x.hi / y.hi;
    return widen(std::min({a, b, c, d}), std::max({a, b, c, d}));
  }
};

// On monotone pieces the image of an interval is the hull of the images of
// its endpoints; the helpers below split at extrema where needed.
inline Interval icos(const Interval& x) {
  if (x.width() > 1.0) return {-1, 1};
  double a = std::cos(x.lo), b = std::cos(x.hi);
  double lo = std::min(a, b), hi = std::max(a, b);
  // extrema at multiples of pi inside x
  double k0 = std::ceil(x.lo / M_PI), k1 = std::floor(x.hi / M_PI);
  for (double k = k0; k <= k1; k += 1) {
    if (std::fmod(std::abs(k), 2.0) == 0) hi = 1;
    else lo = -1;
  }
  return Interval::widen(std::max(-1.0, lo), std::min(1.0, hi), 2);
}
inline Interval isin(const Interval& x) { return icos(x - Interval(M_PI / 2)); }

// atan2 over a box not meeting the cut along the negative x axis.
inline Interval iatan2(const Interval& y, const Interval& x) {
  if (x.hi <= 0 && y.contains_zero()) throw CertificationFailedAtResolution("atan2 enclosure meets the branch cut");
  if (x.contains_zero() && y.contains_zero()) throw CertificationFailedAtResolution("atan2 of a box containing 0");
  double c[4] = {std::atan2(y.lo, x.lo), std::atan2(y.lo, x.hi), std::atan2(y.hi, x.lo), std::atan2(y.hi, x.hi)};
  return Interval::widen(*std::min_element(c, c + 4), *std::max_element(c, c + 4), 2);
}

}  // namespace flexcircle
