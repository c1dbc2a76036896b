#pragma once

#include <cmath>
#include <cstdint>

#include "fidcurve/errors.hpp"

namespace fidcurve {

// First-order dual number: value plus derivative with respect to one
// designated seed variable. Arithmetic follows the chain rule, so running
// an expression on Dual inputs yields the exact derivative of the
// composite map.
struct Dual {
  double val = 0.0;
  double der = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v), der(0.0) {}
  constexpr Dual(double v, double d) : val(v), der(d) {}

  friend constexpr Dual operator+(Dual a, Dual b) {
    return {a.val + b.val, a.der + b.der};
  }
  friend constexpr Dual operator-(Dual a, Dual b) {
    return {a.val - b.val, a.der - b.der};
  }
  friend constexpr Dual operator-(Dual a) { return {-a.val, -a.der}; }
  friend constexpr Dual operator*(Dual a, Dual b) {
    return {a.val * b.val, a.der * b.val + a.val * b.der};
  }
  friend Dual operator/(Dual a, Dual b) {
    if (b.val == 0.0) throw DomainError("division by zero");
    return {a.val / b.val, (a.der * b.val - a.val * b.der) / (b.val * b.val)};
  }
};

namespace detail {

// Integer power by repeated squaring; exact for polynomial bases.
inline double powi(double base, long long n) {
  if (n < 0) {
    if (base == 0.0) throw DomainError("zero raised to a negative power");
    return 1.0 / powi(base, -n);
  }
  double r = 1.0, b = base;
  while (n > 0) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

inline bool is_integral_exponent(double p, long long& out) {
  if (!std::isfinite(p)) return false;
  if (p != std::nearbyint(p)) return false;
  if (std::fabs(p) > 9.0e15) return false;
  out = static_cast<long long>(p);
  return true;
}

}  // namespace detail

inline Dual sin(Dual a) { return {std::sin(a.val), std::cos(a.val) * a.der}; }
inline Dual cos(Dual a) { return {std::cos(a.val), -std::sin(a.val) * a.der}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.val);
  return {e, e * a.der};
}

inline Dual log(Dual a) {
  if (a.val <= 0.0) throw DomainError("log of non-positive value");
  return {std::log(a.val), a.der / a.val};
}

inline Dual sqrt(Dual a) {
  if (a.val < 0.0) throw DomainError("sqrt of negative value");
  const double s = std::sqrt(a.val);
  if (a.val == 0.0) {
    if (a.der == 0.0) return {0.0, 0.0};
    throw DomainError("derivative of sqrt is singular at zero");
  }
  return {s, a.der / (2.0 * s)};
}

// Derivative convention at the kink: d|x|/dx at 0 is taken as 0.
inline Dual abs(Dual a) {
  const double sign = a.val > 0.0 ? 1.0 : (a.val < 0.0 ? -1.0 : 0.0);
  return {std::fabs(a.val), sign * a.der};
}

inline Dual pow(Dual a, Dual b) {
  if (b.der == 0.0) {
    long long n = 0;
    if (detail::is_integral_exponent(b.val, n)) {
      if (n == 0) return {1.0, 0.0};
      const double v = detail::powi(a.val, n);
      double d;
      if (n == 1) {
        d = a.der;
      } else if (a.val == 0.0 && n < 0) {
        throw DomainError("zero raised to a negative power");
      } else {
        d = static_cast<double>(n) * detail::powi(a.val, n - 1) * a.der;
      }
      return {v, d};
    }
    // Real exponent: restrict to non-negative bases.
    if (a.val < 0.0)
      throw DomainError("negative base with non-integer exponent");
    if (a.val == 0.0) {
      if (b.val < 0.0) throw DomainError("zero raised to a negative power");
      const double v = 0.0;
      if (a.der == 0.0 || b.val > 1.0) return {v, 0.0};
      throw DomainError("derivative of power is singular at zero base");
    }
    const double v = std::pow(a.val, b.val);
    return {v, b.val * std::pow(a.val, b.val - 1.0) * a.der};
  }
  // Exponent varies with the seed: a^b = exp(b log a), needs a > 0.
  if (a.val <= 0.0)
    throw DomainError("non-positive base with varying exponent");
  const double v = std::pow(a.val, b.val);
  return {v, v * (b.der * std::log(a.val) + b.val * a.der / a.val)};
}

}  // namespace fidcurve
