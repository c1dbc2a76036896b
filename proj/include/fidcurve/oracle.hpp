#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "fidcurve/engine.hpp"
#include "fidcurve/errors.hpp"
#include "fidcurve/geometry.hpp"
#include "fidcurve/rng.hpp"

namespace fidcurve {

// Outcome of a Monte Carlo conditioning run. accepted_t keeps acceptance
// order, which is deterministic for a given seed: proposals are split into
// 64 fixed chunks with per-chunk generator streams, so a parallel driver
// that merges chunks in index order reproduces the serial result.
struct OracleResult {
  std::vector<double> accepted_t;
  double acceptance_rate = 0.0;
  double epsilon = 0.0;
  std::uint64_t n_proposed = 0;
  std::uint64_t n_accepted = 0;
  std::uint64_t inversion_failures = 0;
  double ks_distance = 0.0;
};

// One-sample Kolmogorov-Smirnov statistic of `samples` against the model
// cdf: sup over the sample points of |empirical - model|.
inline double ks_distance(std::vector<double> samples,
                          const RestrictedFiducial& rf) {
  if (samples.empty()) {
    throw DomainError("ks distance needs at least one sample");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double model = rf.cdf(samples[i]);
    const double lo = model - static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n - model;
    d = std::max({d, lo, hi});
  }
  return d;
}

namespace detail {

inline constexpr int kOracleChunks = 64;

// Runs `body(chunk_rng, n_chunk)` over 64 deterministic chunks whose seeds
// are drawn up front from the caller's generator.
template <typename Body>
void run_oracle_chunks(Rng& rng, std::uint64_t n_proposed, Body&& body) {
  std::uint64_t seeds[kOracleChunks];
  for (int i = 0; i < kOracleChunks; ++i) seeds[i] = rng();
  const std::uint64_t base = n_proposed / kOracleChunks;
  const std::uint64_t rem = n_proposed % kOracleChunks;
  for (int i = 0; i < kOracleChunks; ++i) {
    const std::uint64_t n_chunk =
        base + (static_cast<std::uint64_t>(i) < rem ? 1 : 0);
    if (n_chunk == 0) continue;
    Rng chunk_rng(seeds[i]);
    body(chunk_rng, n_chunk);
  }
}

}  // namespace detail

// Conditioning through the chart theta = mu(t) + s * d: each proposed theta
// is inverted to (t, s) by locating the parameter where theta - mu(t) is
// parallel to d, and kept when |s| < epsilon. The accepted t converge, as
// epsilon shrinks, to the Shift{d} restricted fiducial.
inline OracleResult slab_oracle(const Scenario& scenario, Vec2 d,
                                double epsilon, std::uint64_t n_proposed,
                                Rng& rng,
                                const RestrictedFiducial* reference = nullptr) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("slab half-width epsilon must be positive");
  }
  if (d.x == 0.0 && d.y == 0.0) {
    throw DomainError("slab direction must not be the zero vector");
  }
  if (n_proposed < 1) throw DomainError("need at least one proposal");

  const Curve& curve = scenario.curve;
  const ParamInterval& iv = curve.interval();
  constexpr int kGrid = 512;
  // Precomputed per-node combinations turn the alignment test
  // cross(theta - mu(t_i), d) into a single subtraction per node:
  // it equals (theta x d) - (mu(t_i) x d).
  std::vector<double> ts(kGrid + 1), mu_cross(kGrid + 1), mu_dot(kGrid + 1);
  double max_speed = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double t = iv.t_min + iv.width() * i / kGrid;
    const auto [p, v] = curve.point_and_velocity(t);
    ts[static_cast<std::size_t>(i)] = t;
    mu_cross[static_cast<std::size_t>(i)] = cross(p, d);
    mu_dot[static_cast<std::size_t>(i)] = dot(p, d);
    max_speed = std::max(max_speed, norm(v));
  }
  const double dd = dot(d, d);
  const double dt = iv.width() / kGrid;
  // Lipschitz slack on s between a node and the true root in its cell.
  const double s_slack = (1.25 * max_speed + 1e-12) * dt / std::sqrt(dd);

  // When mu x d is strictly monotone along the grid the alignment root is
  // unique and binary search finds its cell; otherwise fall back to a full
  // scan that also detects ambiguous (multi-root) proposals.
  bool increasing = true;
  bool decreasing = true;
  for (int i = 0; i < kGrid; ++i) {
    const double a = mu_cross[static_cast<std::size_t>(i)];
    const double b = mu_cross[static_cast<std::size_t>(i) + 1];
    if (!(b > a)) increasing = false;
    if (!(b < a)) decreasing = false;
  }
  const bool monotone = increasing || decreasing;
  std::vector<double> search = mu_cross;
  if (decreasing) {
    for (double& v : search) v = -v;
  }

  auto align = [&](double t, Vec2 theta) {
    const Vec2 q = theta - curve.point(t);
    return cross(q, d);
  };

  OracleResult result;
  result.epsilon = epsilon;
  result.n_proposed = n_proposed;
  std::uint64_t failures = 0;

  auto refine_and_accept = [&](Vec2 theta, int cell) {
    double a = ts[static_cast<std::size_t>(cell)];
    double b = ts[static_cast<std::size_t>(cell) + 1];
    double fa = align(a, theta);
    double fb = align(b, theta);
    double root;
    if (fa == 0.0) {
      root = a;
    } else if (fb == 0.0) {
      root = b;
    } else if (fa * fb > 0.0) {
      return;  // borderline rounding near a node; treat as a miss
    } else {
      // Illinois variant of regula falsi.
      double side = 0.0;
      for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
        const double m = (a * fb - b * fa) / (fb - fa);
        const double fm = align(m, theta);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fm > 0.0) == (fa > 0.0)) {
          a = m;
          fa = fm;
          if (side == 1.0) fb *= 0.5;
          side = 1.0;
        } else {
          b = m;
          fb = fm;
          if (side == -1.0) fa *= 0.5;
          side = -1.0;
        }
      }
      root = 0.5 * (a + b);
    }
    const double s = dot(theta - curve.point(root), d) / dd;
    if (std::abs(s) < epsilon) result.accepted_t.push_back(root);
  };

  detail::run_oracle_chunks(rng, n_proposed, [&](Rng& crng, std::uint64_t n) {
    for (std::uint64_t k = 0; k < n; ++k) {
      const Vec2 u = scenario.noise.sample(crng);
      const Vec2 theta = scenario.x - u;
      const double tc = cross(theta, d);
      const double td = dot(theta, d);
      if (monotone) {
        const double key = decreasing ? -tc : tc;
        if (key < search.front() || key > search.back()) continue;
        const auto it = std::upper_bound(search.begin(), search.end(), key);
        int cell = static_cast<int>(it - search.begin()) - 1;
        if (cell < 0) cell = 0;
        if (cell >= kGrid) cell = kGrid - 1;
        // Cheap reject: |s| at a cell endpoint minus the in-cell drift.
        const double s_node =
            std::abs(td - mu_dot[static_cast<std::size_t>(cell)]) / dd;
        if (s_node - s_slack > epsilon) continue;
        refine_and_accept(theta, cell);
      } else {
        int cell = -1;
        int roots = 0;
        double prev = tc - mu_cross[0];
        bool prev_zero = prev == 0.0;
        if (prev_zero) ++roots;
        for (int i = 1; i <= kGrid; ++i) {
          const double cur = tc - mu_cross[static_cast<std::size_t>(i)];
          if (cur == 0.0) {
            if (!prev_zero) ++roots;
            if (roots == 1) cell = std::min(i, kGrid - 1);
            prev_zero = true;
          } else {
            if (!prev_zero && prev * cur < 0.0) {
              ++roots;
              if (roots == 1) cell = i - 1;
            }
            prev_zero = false;
          }
          prev = cur;
        }
        if (roots == 0) continue;
        if (roots > 1) {
          ++failures;
          continue;
        }
        const double s_node =
            std::abs(td - mu_dot[static_cast<std::size_t>(cell)]) / dd;
        if (s_node - s_slack > epsilon) continue;
        refine_and_accept(theta, cell);
      }
    }
  });

  result.inversion_failures = failures;
  if (failures * 1000 > n_proposed) {
    throw Error("slab inversion failed for more than 0.1% of proposals; the (t,s) chart is not invertible for this curve and direction");
  }
  result.n_accepted = result.accepted_t.size();
  result.acceptance_rate =
      static_cast<double>(result.n_accepted) / static_cast<double>(n_proposed);
  if (result.n_accepted == 0) {
    throw Error("slab oracle accepted no proposals; increase epsilon or n_proposed");
  }
  if (reference != nullptr) {
    result.ks_distance = ks_distance(result.accepted_t, *reference);
  } else {
    const RestrictedFiducial rf =
        normalize(scenario, PriorWeight(ShiftPrior(d)), iv, 1e-10);
    result.ks_distance = ks_distance(result.accepted_t, rf);
  }
  return result;
}

// Geometric conditioning: keep theta whose distance to the curve is below
// epsilon and record the projected parameter. The accepted t converge, as
// epsilon shrinks, to the arc-length (Jeffreys) restricted fiducial.
inline OracleResult tube_oracle(const Scenario& scenario, double epsilon,
                                std::uint64_t n_proposed, Rng& rng,
                                int grid_n = 512,
                                const RestrictedFiducial* reference = nullptr) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError("tube half-width epsilon must be positive");
  }
  if (n_proposed < 1) throw DomainError("need at least one proposal");

  const CurveGrid grid(scenario.curve, grid_n);
  const double eps2 = epsilon * epsilon;

  OracleResult result;
  result.epsilon = epsilon;
  result.n_proposed = n_proposed;

  detail::run_oracle_chunks(rng, n_proposed, [&](Rng& crng, std::uint64_t n) {
    for (std::uint64_t k = 0; k < n; ++k) {
      const Vec2 u = scenario.noise.sample(crng);
      const Vec2 theta = scenario.x - u;
      const std::optional<CurveGrid::Projection> proj =
          grid.project_within(theta, epsilon);
      if (proj && proj->dist2 < eps2) result.accepted_t.push_back(proj->t);
    }
  });

  result.n_accepted = result.accepted_t.size();
  result.acceptance_rate =
      static_cast<double>(result.n_accepted) / static_cast<double>(n_proposed);
  if (result.n_accepted == 0) {
    throw Error("tube oracle accepted no proposals; increase epsilon or n_proposed");
  }
  if (reference != nullptr) {
    result.ks_distance = ks_distance(result.accepted_t, *reference);
  } else {
    const RestrictedFiducial rf = normalize(
        scenario, PriorWeight(JeffreysPrior{}), scenario.curve.interval(), 1e-10);
    result.ks_distance = ks_distance(result.accepted_t, rf);
  }
  return result;
}

}  // namespace fidcurve
