#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "fidcurve/errors.hpp"
#include "fidcurve/expr.hpp"
#include "fidcurve/geometry.hpp"
#include "fidcurve/noise.hpp"
#include "fidcurve/priors.hpp"
#include "fidcurve/quadrature.hpp"
#include "fidcurve/rng.hpp"

namespace fidcurve {

// Observed-data problem: a curve of candidate means, an error law, and the
// observed point x. The restricted density on the curve parameter is
// f(x - mu(t)) * w(t) up to normalization.
struct Scenario {
  Curve curve;
  GaussianNoise noise;
  Point2 x;

  Scenario(Curve curve_in, GaussianNoise noise_in, Point2 x_in)
      : curve(std::move(curve_in)), noise(noise_in), x(x_in) {
    if (!(std::isfinite(x.x) && std::isfinite(x.y))) {
      throw DomainError("observation must be finite");
    }
  }
};

inline double log_unnormalized_density(const Scenario& scenario,
                                       const PriorWeight& prior, double t) {
  const auto [mu, vel] = scenario.curve.point_and_velocity(t);
  const double w = prior_weight(prior, mu, vel, t);
  if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
  return scenario.noise.log_density(scenario.x - mu) + std::log(w);
}

inline double unnormalized_density(const Scenario& scenario,
                                   const PriorWeight& prior, double t) {
  const auto [mu, vel] = scenario.curve.point_and_velocity(t);
  return scenario.noise.density(scenario.x - mu) * prior_weight(prior, mu, vel, t);
}

// Normalized restricted density on a parameter interval, with tabulated cdf
// on the adaptive-quadrature refinement. Immutable once built; see
// normalize() below for the construction contract.
class RestrictedFiducial {
 public:
  double pdf(double t) const {
    // Exact re-evaluation of g/Z, in the shifted log scale so far-from-peak
    // points do not underflow prematurely.
    const double lg = log_unnormalized_density(scenario_, prior_, t);
    return std::exp(lg - log_shift_) / z_hat_;
  }

  double cdf(double t) const {
    if (t <= interval_.t_min) return 0.0;
    if (t >= interval_.t_max) return 1.0;
    const std::size_t k = segment_index(t);
    const double a = ts_[k];
    const double b = ts_[k + 1];
    const double h = b - a;
    const double fa = cdf_[k];
    const double fb = cdf_[k + 1];
    const double delta = (fb - fa) / h;
    double da = pdf_nodes_[k];
    double db = pdf_nodes_[k + 1];
    // Fritsch-Carlson limiting keeps the cubic monotone on the segment.
    if (delta <= 0.0) {
      da = 0.0;
      db = 0.0;
    } else {
      const double alpha = da / delta;
      const double beta = db / delta;
      const double r2 = alpha * alpha + beta * beta;
      if (r2 > 9.0) {
        const double tau = 3.0 / std::sqrt(r2);
        da = tau * alpha * delta;
        db = tau * beta * delta;
      }
    }
    const double s = (t - a) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double value = fa * (2.0 * s3 - 3.0 * s2 + 1.0) +
                         fb * (-2.0 * s3 + 3.0 * s2) +
                         h * (da * (s3 - 2.0 * s2 + s) + db * (s3 - s2));
    return std::clamp(value, 0.0, 1.0);
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("quantile requires p in (0,1)");
    }
    // Locate the tabulated segment containing p, then bisect inside it.
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
    std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
    if (k > 0) --k;
    if (k >= ts_.size() - 1) k = ts_.size() - 2;
    double lo = ts_[k];
    double hi = ts_[k + 1];
    for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  std::vector<double> sample(Rng& rng, std::size_t n) const {
    if (n < 1) throw DomainError("sample size must be at least 1");
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(uniform01(rng)));
    return out;
  }

  // Density of phi(T) at y for a map phi strictly monotone on the interval.
  // The inverse is found by bisection; monotonicity is checked on the
  // tabulated node grid.
  double pushforward_pdf(const Expression& map, double y) const {
    const auto vars = map.free_vars();
    if (vars.size() != 1) {
      throw DomainError("pushforward map must have exactly one free variable");
    }
    double prev = 0.0;
    int direction = 0;
    for (std::size_t i = 0; i < ts_.size(); ++i) {
      const double v = map.eval(std::span<const double>(&ts_[i], 1));
      if (!std::isfinite(v)) {
        throw DomainError("pushforward map is not finite on the interval");
      }
      if (i > 0) {
        const int step = v > prev ? 1 : (v < prev ? -1 : 0);
        if (step == 0 || (direction != 0 && step != direction)) {
          throw DomainError("pushforward map must be strictly monotone on the interval");
        }
        direction = step;
      }
      prev = v;
    }
    auto phi = [&](double t) {
      return map.eval(std::span<const double>(&t, 1));
    };
    const double va = phi(interval_.t_min);
    const double vb = phi(interval_.t_max);
    const double ylo = std::min(va, vb);
    const double yhi = std::max(va, vb);
    if (!(y >= ylo && y <= yhi)) {
      throw DomainError("pushforward point lies outside the image of the interval");
    }
    double lo = interval_.t_min;
    double hi = interval_.t_max;
    const double tol = 1e-14 * std::max(1.0, interval_.width());
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
      const double mid = 0.5 * (lo + hi);
      const bool below = direction > 0 ? phi(mid) < y : phi(mid) > y;
      if (below) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double tinv = 0.5 * (lo + hi);
    const double deriv = map.eval_dual(std::span<const double>(&tinv, 1), 0).der;
    // Vanishing is judged against the map's mean slope so critical values are
    // rejected instead of dividing by a rounding-level derivative.
    const double mean_slope = (yhi - ylo) / interval_.width();
    if (!(std::abs(deriv) > 1e-12 * std::max(mean_slope, 1e-300))) {
      throw DomainError("pushforward map derivative vanishes at the preimage");
    }
    return pdf(tinv) / std::abs(deriv);
  }

  const Scenario& scenario() const { return scenario_; }
  const PriorWeight& prior() const { return prior_; }
  const ParamInterval& interval() const { return interval_; }
  double normalizer() const { return z_; }
  double log_normalizer() const { return log_z_; }
  double tolerance() const { return tol_; }
  double mean_t() const { return mean_; }
  double mode_t() const { return mode_; }
  // Refinement nodes with the tabulated normalized pdf and cdf.
  const std::vector<double>& nodes() const { return ts_; }
  const std::vector<double>& node_pdf() const { return pdf_nodes_; }
  const std::vector<double>& node_cdf() const { return cdf_; }

  friend RestrictedFiducial normalize(const Scenario&, const PriorWeight&,
                                      const ParamInterval&, double,
                                      std::size_t);

 private:
  RestrictedFiducial(Scenario scenario, PriorWeight prior,
                     ParamInterval interval, double tol)
      : scenario_(std::move(scenario)),
        prior_(std::move(prior)),
        interval_(interval),
        tol_(tol) {}

  std::size_t segment_index(double t) const {
    const auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - ts_.begin());
    if (k == 0) return 0;
    if (k >= ts_.size()) return ts_.size() - 2;
    return k - 1;
  }

  Scenario scenario_;
  PriorWeight prior_;
  ParamInterval interval_;
  double tol_;
  double log_shift_ = 0.0;  // max of log g on the scouting grid
  double z_hat_ = 0.0;      // integral of exp(log g - shift)
  double z_ = 0.0;
  double log_z_ = 0.0;
  double mean_ = 0.0;
  double mode_ = 0.0;
  std::vector<double> ts_;
  std::vector<double> pdf_nodes_;
  std::vector<double> cdf_;
};

namespace detail {

struct QuadLeaf {
  double a;
  double b;
  double integral;
  double moment;
  double ga;
  double gb;
};

// Deterministic recursive bisection. A panel is accepted when its two
// half-panel error estimates fit the local budget and the cubic Hermite
// interpolant of the cdf reproduces the left-half integral at the midpoint;
// the two halves are then emitted as tabulation segments.
template <typename F>
class AdaptiveBuilder {
 public:
  AdaptiveBuilder(F& g, double allow_total, double hermite_tol,
                  std::size_t max_panels)
      : g_(g),
        hermite_tol_(hermite_tol),
        allow_total_(allow_total),
        max_panels_(max_panels) {}

  std::vector<QuadLeaf> build(double lo, double hi, int init) {
    leaves_.clear();
    panels_used_ = 0;
    const double step = (hi - lo) / init;
    const double allow = allow_total_ / init;
    double ga = g_(lo);
    for (int i = 0; i < init; ++i) {
      const double a = lo + i * step;
      const double b = i + 1 == init ? hi : lo + (i + 1) * step;
      const double gb = g_(b);
      descend(a, b, ga, gb, allow, 0);
      ga = gb;
    }
    return std::move(leaves_);
  }

 private:
  static constexpr int kMaxDepth = 48;

  void descend(double a, double b, double ga, double gb, double allow,
               int depth) {
    panels_used_ += 2;
    if (panels_used_ > max_panels_) {
      throw BudgetError("quadrature node budget exceeded before reaching tolerance");
    }
    const double m = 0.5 * (a + b);
    const double gm = g_(m);
    const gk::Panel left = gk::panel(g_, a, m);
    const gk::Panel right = gk::panel(g_, m, b);
    // Hermite prediction of the a..m mass from endpoint values alone; when
    // it matches the quadrature the cdf interpolation is trustworthy here.
    const double total = left.integral + right.integral;
    const double hermite_mid = 0.5 * total + (b - a) * (ga - gb) / 8.0;
    const bool smooth = std::abs(hermite_mid - left.integral) <= hermite_tol_;
    const bool converged = left.error + right.error <= allow;
    if (depth >= kMaxDepth || (converged && smooth)) {
      leaves_.push_back({a, m, left.integral, left.moment, ga, gm});
      leaves_.push_back({m, b, right.integral, right.moment, gm, gb});
      return;
    }
    descend(a, m, ga, gm, 0.5 * allow, depth + 1);
    descend(m, b, gm, gb, 0.5 * allow, depth + 1);
  }

  F& g_;
  double hermite_tol_;
  double allow_total_;
  std::size_t max_panels_;
  std::size_t panels_used_ = 0;
  std::vector<QuadLeaf> leaves_;
};

}  // namespace detail

// Builds the normalized restricted density on `interval`, which must lie
// inside the curve's parameter interval. tol is the relative accuracy of
// the normalizer; the quadrature targets absolute error tol * Z.
inline RestrictedFiducial normalize(const Scenario& scenario,
                                    const PriorWeight& prior,
                                    const ParamInterval& interval,
                                    double tol,
                                    std::size_t max_nodes = 100000) {
  if (!(tol >= 1e-12 && tol <= 1e-3)) {
    throw DomainError("quadrature tolerance must lie in [1e-12, 1e-3]");
  }
  if (!scenario.curve.interval().contains(interval.t_min) ||
      !scenario.curve.interval().contains(interval.t_max)) {
    throw DomainError("normalization interval must lie inside the curve interval");
  }
  RestrictedFiducial rf(scenario, prior, interval, tol);

  // Scout pass: find the log-density peak so everything after runs on
  // exp(log g - peak), which is O(1) near the mass and underflows only far
  // away where it carries none.
  constexpr int kScout = 512;
  const double lo = interval.t_min;
  const double hi = interval.t_max;
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> scout_lg(kScout + 1);
  for (int i = 0; i <= kScout; ++i) {
    const double t = lo + (hi - lo) * i / kScout;
    const double lg = log_unnormalized_density(scenario, prior, t);
    scout_lg[static_cast<std::size_t>(i)] = lg;
    if (lg > peak) peak = lg;
  }
  if (!std::isfinite(peak)) {
    throw UnderflowError(
        "density vanishes on the whole interval; the weight or likelihood is degenerate");
  }
  // An unscouted spike between nodes can rise above the scouted peak by
  // about the largest adjacent log step, so that slack enters the bound
  // log Z <= peak + rise + log(2 width). If even the bound falls below the
  // smallest normal double, refinement cannot recover a usable normalizer.
  double log_rise = 0.0;
  for (int i = 1; i <= kScout; ++i) {
    const double a = scout_lg[static_cast<std::size_t>(i - 1)];
    const double b = scout_lg[static_cast<std::size_t>(i)];
    if (std::isfinite(a) && std::isfinite(b))
      log_rise = std::max(log_rise, std::abs(b - a));
  }
  if (peak + log_rise + std::log(2.0 * (hi - lo) + 1.0) < std::log(1e-300)) {
    throw UnderflowError(
        "normalizer underflows; rescale the problem so the observation is "
        "closer to the curve");
  }
  rf.log_shift_ = peak;
  double z_scout = 0.0;
  {
    const double dt = (hi - lo) / kScout;
    double prev = std::exp(scout_lg[0] - peak);
    for (int i = 1; i <= kScout; ++i) {
      const double cur = std::exp(scout_lg[static_cast<std::size_t>(i)] - peak);
      z_scout += 0.5 * (prev + cur) * dt;
      prev = cur;
    }
  }
  z_scout = std::max(z_scout, 1e-12 * (hi - lo));

  auto ghat = [&](double t) {
    return std::exp(log_unnormalized_density(scenario, prior, t) - peak);
  };

  // The error budget references the scouted mass estimate; if the true mass
  // comes out much smaller (a spike between scout nodes) rebuild against
  // the measured value so the relative target still holds.
  constexpr int kInitPanels = 16;
  std::vector<detail::QuadLeaf> leaves;
  double z_hat = 0.0;
  double scale = z_scout;
  for (int pass = 0; pass < 3; ++pass) {
    detail::AdaptiveBuilder<decltype(ghat)> builder(
        ghat, 0.25 * tol * scale, 1e-11 * scale + 1e-300, max_nodes);
    leaves = builder.build(lo, hi, kInitPanels);
    z_hat = 0.0;
    for (const auto& leaf : leaves) z_hat += leaf.integral;
    if (z_hat >= 0.3 * scale || z_hat <= 0.0) break;
    scale = z_hat;
  }
  if (!(z_hat > 0.0)) {
    throw UnderflowError(
        "normalizer vanished in the shifted scale; the density is numerically degenerate");
  }
  rf.z_hat_ = z_hat;
  rf.log_z_ = peak + std::log(z_hat);
  if (rf.log_z_ < std::log(1e-300)) {
    throw UnderflowError(
        "normalizing constant below 1e-300; rescale the observation or the noise");
  }
  rf.z_ = std::exp(rf.log_z_);
  if (!std::isfinite(rf.z_)) {
    throw Error("normalizing constant overflows the double range; rescale the problem");
  }

  rf.ts_.resize(leaves.size() + 1);
  rf.pdf_nodes_.resize(leaves.size() + 1);
  rf.cdf_.resize(leaves.size() + 1);
  rf.ts_[0] = leaves.front().a;
  rf.pdf_nodes_[0] = leaves.front().ga / z_hat;
  rf.cdf_[0] = 0.0;
  double acc = 0.0;
  double moment = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    acc += leaves[i].integral;
    moment += leaves[i].moment;
    rf.ts_[i + 1] = leaves[i].b;
    rf.pdf_nodes_[i + 1] = leaves[i].gb / z_hat;
    rf.cdf_[i + 1] = acc / z_hat;
  }
  rf.cdf_.back() = 1.0;
  rf.mean_ = moment / z_hat;

  // Mode: best tabulated node refined by ternary search between its
  // neighbors on the exact density.
  std::size_t best = 0;
  for (std::size_t i = 1; i < rf.pdf_nodes_.size(); ++i) {
    if (rf.pdf_nodes_[i] > rf.pdf_nodes_[best]) best = i;
  }
  double mlo = rf.ts_[best > 0 ? best - 1 : 0];
  double mhi = rf.ts_[std::min(best + 1, rf.ts_.size() - 1)];
  for (int i = 0; i < 200 && mhi - mlo > 1e-12; ++i) {
    const double m1 = mlo + (mhi - mlo) / 3.0;
    const double m2 = mhi - (mhi - mlo) / 3.0;
    if (ghat(m1) < ghat(m2)) {
      mlo = m1;
    } else {
      mhi = m2;
    }
  }
  rf.mode_ = 0.5 * (mlo + mhi);
  return rf;
}

inline double pdf(const RestrictedFiducial& rf, double t) { return rf.pdf(t); }
inline double cdf(const RestrictedFiducial& rf, double t) { return rf.cdf(t); }
inline double quantile(const RestrictedFiducial& rf, double p) {
  return rf.quantile(p);
}

inline std::vector<double> sample_fiducial(const RestrictedFiducial& rf,
                                           Rng& rng, std::size_t n) {
  return rf.sample(rng, n);
}

inline double pushforward_pdf(const RestrictedFiducial& rf,
                              const Expression& map, double y) {
  return rf.pushforward_pdf(map, y);
}

}  // namespace fidcurve
