#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fidcurve/engine.hpp"
#include "fidcurve/errors.hpp"
#include "fidcurve/expr.hpp"
#include "fidcurve/geometry.hpp"
#include "fidcurve/noise.hpp"
#include "fidcurve/stats.hpp"

namespace fidcurve {

namespace detail {

// Dense cumulative table of a nonnegative integrand on an equispaced grid:
// composite Simpson pair sums with the interpolating parabola integrated
// inside each pair, so cdf queries are O(1) and smooth.
class SimpsonCdf {
 public:
  template <typename F>
  SimpsonCdf(F&& f, double lo, double hi, int pairs) : lo_(lo), hi_(hi) {
    const int n = 2 * pairs;
    h_ = (hi - lo) / n;
    f_.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
      f_[static_cast<std::size_t>(i)] = f(lo + h_ * i);
    }
    cum_.resize(static_cast<std::size_t>(pairs) + 1);
    cum_[0] = 0.0;
    for (int k = 0; k < pairs; ++k) {
      const double f0 = f_[static_cast<std::size_t>(2 * k)];
      const double f1 = f_[static_cast<std::size_t>(2 * k) + 1];
      const double f2 = f_[static_cast<std::size_t>(2 * k) + 2];
      cum_[static_cast<std::size_t>(k) + 1] =
          cum_[static_cast<std::size_t>(k)] + h_ * (f0 + 4.0 * f1 + f2) / 3.0;
    }
  }

  double total() const { return cum_.back(); }

  // Integral of the tabulated parabolas from lo to t.
  double cumulative(double t) const {
    if (t <= lo_) return 0.0;
    if (t >= hi_) return total();
    const double u = (t - lo_) / (2.0 * h_);
    int k = static_cast<int>(u);
    const int pairs = static_cast<int>(cum_.size()) - 1;
    if (k >= pairs) k = pairs - 1;
    const double f0 = f_[static_cast<std::size_t>(2 * k)];
    const double f1 = f_[static_cast<std::size_t>(2 * k) + 1];
    const double f2 = f_[static_cast<std::size_t>(2 * k) + 2];
    const double xi = (t - (lo_ + 2.0 * h_ * k)) / h_;
    const double xi2 = xi * xi;
    const double xi3 = xi2 * xi;
    const double inc =
        h_ * (f0 * xi + (-3.0 * f0 + 4.0 * f1 - f2) * xi2 / 4.0 +
              (f0 - 2.0 * f1 + f2) * xi3 / 6.0);
    return cum_[static_cast<std::size_t>(k)] + inc;
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("quantile requires p in (0,1)");
    }
    const double target = p * total();
    double a = lo_;
    double b = hi_;
    for (int i = 0; i < 200 && b - a > 1e-12 * (hi_ - lo_); ++i) {
      const double m = 0.5 * (a + b);
      if (cumulative(m) < target) {
        a = m;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  }

 private:
  double lo_;
  double hi_;
  double h_;
  std::vector<double> f_;
  std::vector<double> cum_;
};

}  // namespace detail

// 1D Gaussian truncated to an interval; the known restricted fiducial for
// the straight-line scenario under the arc-length weight.
struct TruncatedGaussian1D {
  double mean;
  double sd;
  ParamInterval interval;

  TruncatedGaussian1D(double mean_in, double sd_in, ParamInterval interval_in)
      : mean(mean_in), sd(sd_in), interval(interval_in) {
    if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean)) {
      throw DomainError("truncated Gaussian needs finite mean and positive sd");
    }
  }

  double mass() const {
    return normal_cdf((interval.t_max - mean) / sd) -
           normal_cdf((interval.t_min - mean) / sd);
  }

  double pdf(double t) const {
    if (t < interval.t_min || t > interval.t_max) return 0.0;
    return normal_pdf((t - mean) / sd) / (sd * mass());
  }

  double cdf(double t) const {
    if (t <= interval.t_min) return 0.0;
    if (t >= interval.t_max) return 1.0;
    const double lo = normal_cdf((interval.t_min - mean) / sd);
    return std::clamp((normal_cdf((t - mean) / sd) - lo) / mass(), 0.0, 1.0);
  }

  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("quantile requires p in (0,1)");
    }
    const double lo = normal_cdf((interval.t_min - mean) / sd);
    return mean + sd * normal_quantile(lo + p * mass());
  }
};

// Von Mises law on [0, 2pi]; the known restricted fiducial for the circle
// scenario under the arc-length weight. The cdf is taken from 0 without
// wraparound, matching the curve parameter interval.
class VonMises {
 public:
  VonMises(double mean_angle, double kappa)
      : mean_(mean_angle),
        kappa_(kappa),
        log_norm_(std::log(kTwoPi) + log_bessel_i0(kappa)),
        table_([this](double t) { return pdf_unclamped(t); }, 0.0, kTwoPi,
               1 << 13) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa) || !std::isfinite(mean_angle)) {
      throw DomainError("von Mises needs finite mean angle and kappa >= 0");
    }
  }

  double mean_angle() const { return mean_; }
  double kappa() const { return kappa_; }

  double pdf(double t) const {
    if (t < 0.0 || t > kTwoPi) return 0.0;
    return pdf_unclamped(t);
  }

  double cdf(double t) const {
    return std::clamp(table_.cumulative(t) / table_.total(), 0.0, 1.0);
  }

  double quantile(double p) const { return table_.quantile(p); }

 private:
  double pdf_unclamped(double t) const {
    return std::exp(kappa_ * std::cos(t - mean_) - log_norm_);
  }

  double mean_;
  double kappa_;
  double log_norm_;
  detail::SimpsonCdf table_;
};

// Reference density defined directly by an unnormalized expression g(t),
// normalized by composite Simpson on 2*65536 subintervals. Serves as the
// fully independent code path the engine is compared against.
class QuadratureReference {
 public:
  QuadratureReference(Expression g, ParamInterval interval)
      : g_(std::move(g)),
        interval_(interval),
        table_([this](double t) { return eval_g(t); }, interval.t_min,
               interval.t_max, 1 << 16) {
    if (g_.free_vars().size() > 1) {
      throw DomainError("reference expression must have one free variable");
    }
    if (!(table_.total() > 0.0) || !std::isfinite(table_.total())) {
      throw DomainError("reference density has no positive mass");
    }
  }

  const Expression& expression() const { return g_; }
  const ParamInterval& interval() const { return interval_; }
  double normalizer() const { return table_.total(); }

  double pdf(double t) const {
    if (t < interval_.t_min || t > interval_.t_max) return 0.0;
    return eval_g(t) / table_.total();
  }

  double cdf(double t) const {
    return std::clamp(table_.cumulative(t) / table_.total(), 0.0, 1.0);
  }

  double quantile(double p) const { return table_.quantile(p); }

 private:
  double eval_g(double t) const {
    if (g_.free_vars().empty()) return g_.eval(std::span<const double>{});
    return g_.eval(std::span<const double>(&t, 1));
  }

  Expression g_;
  ParamInterval interval_;
  detail::SimpsonCdf table_;
};

using ReferencePosterior =
    std::variant<TruncatedGaussian1D, VonMises, QuadratureReference>;

inline double ref_pdf(const ReferencePosterior& ref, double t) {
  return std::visit([&](const auto& r) { return r.pdf(t); }, ref);
}
inline double ref_cdf(const ReferencePosterior& ref, double t) {
  return std::visit([&](const auto& r) { return r.cdf(t); }, ref);
}
inline double ref_quantile(const ReferencePosterior& ref, double p) {
  return std::visit([&](const auto& r) { return r.quantile(p); }, ref);
}

struct SeidenfeldScenario {
  Scenario scenario;
  // Normalized e^{-|x-mu(t)|^2/2}: the limit of slab conditioning along
  // d=(1,0), i.e. a flat weight in t.
  QuadratureReference uniform_in_t;
  // Normalized 3t^2 e^{-|x-mu(t)|^2/2}: the limit along d=(0,1), i.e. a
  // flat weight in t^3.
  QuadratureReference uniform_in_t_cubed;
};

// The cubic curve (t^3, t) with identity noise: the classic example where
// two natural conditionings give genuinely different answers.
inline SeidenfeldScenario seidenfeld(Point2 x, double t_bound) {
  if (!(t_bound > 0.0) || !std::isfinite(t_bound)) {
    throw DomainError("t_bound must be positive");
  }
  const ParamInterval iv(-t_bound, t_bound);
  Curve curve(Expression::parse("t^3", std::vector<std::string>{"t"}),
              Expression::parse("t", std::vector<std::string>{"t"}), iv);
  Scenario sc(std::move(curve), GaussianNoise::isotropic(1.0), x);
  const std::string like = "exp(-((" + detail::format_double(x.x) +
                           " - t^3)^2 + (" + detail::format_double(x.y) +
                           " - t)^2)/2)";
  QuadratureReference g1(
      Expression::parse(like, std::vector<std::string>{"t"}), iv);
  QuadratureReference g2(
      Expression::parse("3*t^2*" + like, std::vector<std::string>{"t"}), iv);
  return {std::move(sc), std::move(g1), std::move(g2)};
}

struct LineScenario {
  Scenario scenario;
  TruncatedGaussian1D reference;
};

// Straight line p0 + t*e with isotropic noise. The arc-length restricted
// fiducial is the projected 1D Gaussian truncated to the interval.
inline LineScenario line_scenario(Point2 p0, Vec2 e, ParamInterval interval,
                                  Point2 x, double sigma = 1.0) {
  if (std::abs(norm(e) - 1.0) > 1e-12) {
    throw DomainError("line direction must be a unit vector");
  }
  if (!(std::isfinite(p0.x) && std::isfinite(p0.y))) {
    throw DomainError("line base point must be finite");
  }
  const std::string mu1 = detail::format_double(p0.x) + " + (" +
                          detail::format_double(e.x) + ")*t";
  const std::string mu2 = detail::format_double(p0.y) + " + (" +
                          detail::format_double(e.y) + ")*t";
  Curve curve(Expression::parse(mu1, std::vector<std::string>{"t"}),
              Expression::parse(mu2, std::vector<std::string>{"t"}), interval);
  Scenario sc(std::move(curve), GaussianNoise::isotropic(sigma), x);
  TruncatedGaussian1D ref(dot(x - p0, e), sigma, interval);
  return {std::move(sc), std::move(ref)};
}

struct CircleScenario {
  Scenario scenario;
  VonMises reference;
};

// Circle of radius r about the origin with identity noise. The arc-length
// restricted fiducial is von Mises with mean atan2(x2, x1) and
// concentration r*|x|.
inline CircleScenario circle_scenario(double r, Point2 x) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw DomainError("circle radius must be positive");
  }
  if (x.x == 0.0 && x.y == 0.0) {
    throw DomainError("observation at the origin leaves the mean angle undefined");
  }
  const ParamInterval iv(0.0, kTwoPi);
  const std::string rs = "(" + detail::format_double(r) + ")";
  Curve curve(Expression::parse(rs + "*cos(t)", std::vector<std::string>{"t"}),
              Expression::parse(rs + "*sin(t)", std::vector<std::string>{"t"}),
              iv);
  Scenario sc(std::move(curve), GaussianNoise::isotropic(1.0), x);
  VonMises ref(std::atan2(x.y, x.x), r * norm(x));
  return {std::move(sc), std::move(ref)};
}

}  // namespace fidcurve
