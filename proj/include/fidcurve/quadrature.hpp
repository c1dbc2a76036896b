#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "fidcurve/errors.hpp"

namespace fidcurve {

// 15-point Kronrod rule with embedded 7-point Gauss rule (QUADPACK dqk15
// abscissae and weights). Exact for polynomials up to degree 22.
namespace gk {

inline constexpr std::array<double, 8> kAbscissae = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

// Gauss weights for the even-indexed abscissae (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
  double integral;      // K15 estimate of the integral
  double moment;        // K15 estimate of the first moment (x * f)
  double error;         // QUADPACK-style error estimate
  double abs_integral;  // K15 estimate of the integral of |f|
};

// Single-panel evaluation; 15 evaluations of f.
template <typename F>
Panel panel(F&& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<double, 15> fv;
  std::array<double, 15> xv;
  for (int i = 0; i < 7; ++i) {
    xv[static_cast<std::size_t>(i)] = center - half * kAbscissae[static_cast<std::size_t>(i)];
    xv[static_cast<std::size_t>(14 - i)] = center + half * kAbscissae[static_cast<std::size_t>(i)];
  }
  xv[7] = center;
  for (int i = 0; i < 15; ++i)
    fv[static_cast<std::size_t>(i)] = f(xv[static_cast<std::size_t>(i)]);

  double resk = 0.0, resg = 0.0, resabs = 0.0, moment = 0.0;
  for (int i = 0; i < 7; ++i) {
    const double sum = fv[static_cast<std::size_t>(i)] + fv[static_cast<std::size_t>(14 - i)];
    resk += kKronrodWeights[static_cast<std::size_t>(i)] * sum;
    resabs += kKronrodWeights[static_cast<std::size_t>(i)] *
              (std::fabs(fv[static_cast<std::size_t>(i)]) +
               std::fabs(fv[static_cast<std::size_t>(14 - i)]));
    moment += kKronrodWeights[static_cast<std::size_t>(i)] *
              (xv[static_cast<std::size_t>(i)] * fv[static_cast<std::size_t>(i)] +
               xv[static_cast<std::size_t>(14 - i)] * fv[static_cast<std::size_t>(14 - i)]);
    if (i % 2 == 1)
      resg += kGaussWeights[static_cast<std::size_t>(i / 2)] * sum;
  }
  resk += kKronrodWeights[7] * fv[7];
  resabs += kKronrodWeights[7] * std::fabs(fv[7]);
  moment += kKronrodWeights[7] * xv[7] * fv[7];
  resg += kGaussWeights[3] * fv[7];

  const double mean = 0.5 * resk;
  double resasc = 0.0;
  for (int i = 0; i < 15; ++i) {
    const std::size_t w = static_cast<std::size_t>(i < 8 ? i : 14 - i);
    resasc += kKronrodWeights[w] * std::fabs(fv[static_cast<std::size_t>(i)] - mean);
  }

  const double integral = resk * half;
  resabs *= half;
  resasc *= half;
  double err = std::fabs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  const double min_val = std::numeric_limits<double>::min();
  if (resabs > min_val / (50.0 * eps))
    err = std::max(err, 50.0 * eps * resabs);

  return Panel{integral, moment * half, err, resabs};
}

}  // namespace gk

// Adaptive bisection driver with a per-panel absolute error budget split
// proportionally to width. Deterministic: the recursion order and split
// points depend only on the inputs.
template <typename F>
double adaptive_gk15(F&& f, double a, double b, double abs_tol,
                     std::size_t max_evals = 1u << 20) {
  if (!(a < b)) throw DomainError("quadrature bounds must satisfy a < b");
  if (!(abs_tol > 0.0)) throw DomainError("quadrature tolerance must be > 0");
  std::size_t evals = 0;
  const double width = b - a;
  const auto rec = [&](const auto& self, double lo, double hi, double budget,
                       int depth) -> double {
    evals += 15;
    if (evals > max_evals)
      throw BudgetError("quadrature evaluation budget exceeded");
    const gk::Panel p = gk::panel(f, lo, hi);
    if ((p.error <= budget && depth >= 1) || depth >= 52)
      return p.integral;
    const double mid = 0.5 * (lo + hi);
    return self(self, lo, mid, 0.5 * budget, depth + 1) +
           self(self, mid, hi, 0.5 * budget, depth + 1);
  };
  // Seed with a modest uniform split so narrow features are not missed by
  // a single panel estimate.
  constexpr int kInitial = 8;
  double total = 0.0;
  for (int i = 0; i < kInitial; ++i) {
    const double lo = a + width * i / kInitial;
    const double hi = a + width * (i + 1) / kInitial;
    total += rec(rec, lo, hi, abs_tol / kInitial, 0);
  }
  return total;
}

}  // namespace fidcurve
