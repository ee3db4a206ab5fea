#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace octo {

// Closed interval over the extended reals with outward-widened primitives.
//
// Every primitive widens its result by a relative slack of 1e-14 plus the
// smallest subnormal, then by one ulp.  This stands in for directed rounding
// and keeps every enclosure sound regardless of the FPU rounding mode.
struct Interval {
  double lo{0.0};
  double hi{0.0};

  constexpr Interval() = default;
  constexpr Interval(double v) : lo(v), hi(v) {}  // NOLINT: implicit point
  constexpr Interval(double l, double h) : lo(l), hi(h) {}

  static constexpr Interval entire() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  }
  static constexpr Interval empty_set() {
    return {std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
  }

  bool empty() const { return !(lo <= hi); }
  double width() const { return hi - lo; }
  double mid() const {
    if (std::isinf(lo) || std::isinf(hi)) {
      if (std::isinf(lo) && std::isinf(hi)) return 0.0;
      return std::isinf(lo) ? hi : lo;
    }
    return lo + 0.5 * (hi - lo);
  }
  double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo << ", " << x.hi << ']';
}

namespace detail {

inline constexpr double kRelSlack = 1e-14;

inline double round_down(double x) {
  if (!std::isfinite(x)) return x;
  const double slack =
      std::fabs(x) * kRelSlack + std::numeric_limits<double>::denorm_min();
  return std::nextafter(x - slack, -std::numeric_limits<double>::infinity());
}

inline double round_up(double x) {
  if (!std::isfinite(x)) return x;
  const double slack =
      std::fabs(x) * kRelSlack + std::numeric_limits<double>::denorm_min();
  return std::nextafter(x + slack, std::numeric_limits<double>::infinity());
}

inline Interval widen(double lo, double hi) {
  return {round_down(lo), round_up(hi)};
}

// 0 * inf is taken as 0: the finite factor is an enclosure bound, not a value.
inline double mul_bound(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b;
}

}  // namespace detail

inline Interval operator-(const Interval& x) { return {-x.hi, -x.lo}; }

inline Interval operator+(const Interval& a, const Interval& b) {
  return detail::widen(a.lo + b.lo, a.hi + b.hi);
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return detail::widen(a.lo - b.hi, a.hi - b.lo);
}

inline Interval operator*(const Interval& a, const Interval& b) {
  using detail::mul_bound;
  const double p1 = mul_bound(a.lo, b.lo);
  const double p2 = mul_bound(a.lo, b.hi);
  const double p3 = mul_bound(a.hi, b.lo);
  const double p4 = mul_bound(a.hi, b.hi);
  return detail::widen(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
}

// Division by an interval containing zero yields the whole real line.
inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.contains_zero()) return Interval::entire();
  const double q1 = a.lo / b.lo;
  const double q2 = a.lo / b.hi;
  const double q3 = a.hi / b.lo;
  const double q4 = a.hi / b.hi;
  return detail::widen(std::min({q1, q2, q3, q4}), std::max({q1, q2, q3, q4}));
}

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline Interval hull(const Interval& a, const Interval& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

namespace detail {

// Smallest integer k with k*period + offset >= x, computed conservatively so
// that a critical point lying within rounding distance of x is not skipped.
inline bool contains_critical(double lo, double hi, double offset,
                              double period) {
  const double k = std::ceil((lo - offset) / period - 1e-12);
  const double point = k * period + offset;
  return point <= hi + 1e-12 * std::max(1.0, std::fabs(hi));
}

}  // namespace detail

// Exact quadrant analysis for arguments spanning less than one period;
// wider arguments get [-1, 1].
inline Interval sin(const Interval& x) {
  constexpr double pi = std::numbers::pi;
  if (!std::isfinite(x.lo) || !std::isfinite(x.hi) || x.width() >= 2.0 * pi)
    return {-1.0, 1.0};
  double lo = std::min(std::sin(x.lo), std::sin(x.hi));
  double hi = std::max(std::sin(x.lo), std::sin(x.hi));
  Interval r = detail::widen(lo, hi);
  if (detail::contains_critical(x.lo, x.hi, pi / 2.0, 2.0 * pi)) r.hi = 1.0;
  if (detail::contains_critical(x.lo, x.hi, -pi / 2.0, 2.0 * pi)) r.lo = -1.0;
  return {std::max(r.lo, -1.0), std::min(r.hi, 1.0)};
}

inline Interval cos(const Interval& x) {
  constexpr double pi = std::numbers::pi;
  if (!std::isfinite(x.lo) || !std::isfinite(x.hi) || x.width() >= 2.0 * pi)
    return {-1.0, 1.0};
  double lo = std::min(std::cos(x.lo), std::cos(x.hi));
  double hi = std::max(std::cos(x.lo), std::cos(x.hi));
  Interval r = detail::widen(lo, hi);
  if (detail::contains_critical(x.lo, x.hi, 0.0, 2.0 * pi)) r.hi = 1.0;
  if (detail::contains_critical(x.lo, x.hi, pi, 2.0 * pi)) r.lo = -1.0;
  return {std::max(r.lo, -1.0), std::min(r.hi, 1.0)};
}

// tan is monotone between poles; an argument touching a pole gives the
// whole real line.
inline Interval tan(const Interval& x) {
  constexpr double pi = std::numbers::pi;
  if (!std::isfinite(x.lo) || !std::isfinite(x.hi) || x.width() >= pi)
    return Interval::entire();
  if (detail::contains_critical(x.lo, x.hi, pi / 2.0, pi))
    return Interval::entire();
  return detail::widen(std::tan(x.lo), std::tan(x.hi));
}

}  // namespace octo
