#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fidcurve/errors.hpp"
#include "fidcurve/expr.hpp"
#include "fidcurve/quadrature.hpp"

namespace fidcurve {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend constexpr Vec2 operator-(Vec2 v) { return {-v.x, -v.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

using Point2 = Vec2;

inline constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 2D cross product.
inline constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::sqrt(v.x * v.x + v.y * v.y); }
inline constexpr double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }

struct ParamInterval {
  double t_min;
  double t_max;

  ParamInterval(double lo, double hi) : t_min(lo), t_max(hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw DomainError("interval bounds must be finite");
    if (!(lo < hi)) throw DomainError("interval requires t_min < t_max");
  }

  double width() const { return t_max - t_min; }
  bool contains(double t) const {
    const double slack = 1e-12 * width();
    return t >= t_min - slack && t <= t_max + slack;
  }
  double clamp(double t) const { return std::min(t_max, std::max(t_min, t)); }
};

// C1 parametric curve t -> (mu1(t), mu2(t)) on a closed interval, with
// velocity from dual-number differentiation of the coordinate expressions.
class Curve {
 public:
  Curve(Expression mu1, Expression mu2, ParamInterval interval,
        std::string param = "t")
      : mu1_(std::move(mu1)),
        mu2_(std::move(mu2)),
        interval_(interval),
        param_(std::move(param)) {
    for (const Expression* e : {&mu1_, &mu2_}) {
      for (const auto& v : e->free_vars())
        if (v != param_)
          throw DomainError("curve component uses variable '" + v +
                            "', expected only '" + param_ + "'");
    }
    mu1_slot_ = mu1_.free_vars().empty() ? -1 : 0;
    mu2_slot_ = mu2_.free_vars().empty() ? -1 : 0;

    // Regularity scan: curve must evaluate and differentiate everywhere;
    // zero velocity at grid points is reported, not rejected.
    constexpr int kGrid = 10'000;
    int zero_velocity = 0;
    for (int i = 0; i <= kGrid; ++i) {
      const double t =
          interval_.t_min + interval_.width() * i / static_cast<double>(kGrid);
      const auto [p, v] = eval_both(t);
      (void)p;
      if (v.x == 0.0 && v.y == 0.0) ++zero_velocity;
    }
    if (zero_velocity > 0)
      warnings_.push_back("velocity vanishes at " +
                          std::to_string(zero_velocity) +
                          " of 10001 grid points");
  }

  Vec2 point(double t) const {
    check(t);
    return point_unchecked(t);
  }

  Vec2 velocity(double t) const {
    check(t);
    return point_and_velocity(t).second;
  }

  // One dual pass per coordinate gives position and velocity together.
  std::pair<Vec2, Vec2> point_and_velocity(double t) const {
    check(t);
    return eval_both(t);
  }

  const ParamInterval& interval() const { return interval_; }
  const Expression& mu1() const { return mu1_; }
  const Expression& mu2() const { return mu2_; }
  const std::string& param_name() const { return param_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::pair<Vec2, Vec2> eval_both(double t) const {
    const double bound[1] = {t};
    Vec2 p, v;
    if (mu1_slot_ >= 0) {
      const Dual d = mu1_.eval_dual(std::span<const double>(bound, 1), 0);
      p.x = d.val;
      v.x = d.der;
    } else {
      p.x = mu1_.eval(std::span<const double>());
      v.x = 0.0;
    }
    if (mu2_slot_ >= 0) {
      const Dual d = mu2_.eval_dual(std::span<const double>(bound, 1), 0);
      p.y = d.val;
      v.y = d.der;
    } else {
      p.y = mu2_.eval(std::span<const double>());
      v.y = 0.0;
    }
    return {p, v};
  }

  Vec2 point_unchecked(double t) const {
    const double bound[1] = {t};
    const std::span<const double> b1(bound, 1);
    const std::span<const double> b0;
    return {mu1_slot_ >= 0 ? mu1_.eval(b1) : mu1_.eval(b0),
            mu2_slot_ >= 0 ? mu2_.eval(b1) : mu2_.eval(b0)};
  }

  void check(double t) const {
    if (!interval_.contains(t))
      throw DomainError("parameter t = " + std::to_string(t) +
                        " outside the curve interval");
  }

  Expression mu1_;
  Expression mu2_;
  ParamInterval interval_;
  std::string param_;
  int mu1_slot_ = -1;
  int mu2_slot_ = -1;
  std::vector<std::string> warnings_;
};

// Arc length of the curve between t0 and t1 by adaptive quadrature of the
// speed, to absolute tolerance tol.
inline double arc_length(const Curve& curve, double t0, double t1,
                         double tol) {
  if (!(tol > 0.0)) throw DomainError("arc_length tolerance must be > 0");
  if (!(t0 < t1)) throw DomainError("arc_length requires t0 < t1");
  if (!curve.interval().contains(t0) || !curve.interval().contains(t1))
    throw DomainError("arc_length bounds outside the curve interval");
  return adaptive_gk15(
      [&](double t) {
        return norm(curve.point_and_velocity(curve.interval().clamp(t)).second);
      },
      t0, t1, tol);
}

// Precomputed sample grid of a curve. Speeds up nearest-point projection
// and chart inversion when many queries hit the same curve.
class CurveGrid {
 public:
  struct Projection {
    double t;
    double dist2;
  };

  CurveGrid(const Curve& curve, int grid_n) : curve_(curve) {
    if (grid_n < 64) throw DomainError("projection grid needs at least 64 points");
    n_ = grid_n;
    ts_.resize(static_cast<std::size_t>(n_) + 1);
    xs_.resize(ts_.size());
    ys_.resize(ts_.size());
    double max_speed = 0.0;
    const ParamInterval& iv = curve.interval();
    for (int i = 0; i <= n_; ++i) {
      const double t = iv.t_min + iv.width() * i / static_cast<double>(n_);
      const auto [p, v] = curve.point_and_velocity(t);
      const std::size_t k = static_cast<std::size_t>(i);
      ts_[k] = t;
      xs_[k] = p.x;
      ys_[k] = p.y;
      max_speed = std::max(max_speed, norm(v));
    }
    dt_ = iv.width() / static_cast<double>(n_);
    // Margin over the grid-sampled maximum; used only for conservative
    // distance lower bounds.
    speed_bound_ = 1.25 * max_speed + 1e-12;
  }

  // A value d such that the true curve-distance of p is >= grid_min - d.
  double slack() const { return 0.5 * speed_bound_ * dt_; }

  double grid_min_dist(Vec2 p, int& argmin) const {
    double best = std::numeric_limits<double>::infinity();
    int best_i = 0;
    const std::size_t m = ts_.size();
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = p.x - xs_[i];
      const double dy = p.y - ys_[i];
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        best_i = static_cast<int>(i);
      }
    }
    argmin = best_i;
    return std::sqrt(best);
  }

  // Nearest parameter by coarse scan plus local refinement of the
  // stationarity condition (p - mu(t)) . mu'(t) = 0.
  Projection project(Vec2 p) const {
    int i = 0;
    grid_min_dist(p, i);
    return refine(p, i);
  }

  // Projection that may bail out early: returns nothing when the distance
  // provably exceeds cutoff.
  std::optional<Projection> project_within(Vec2 p, double cutoff) const {
    int i = 0;
    const double gmin = grid_min_dist(p, i);
    if (gmin - slack() > cutoff) return std::nullopt;
    return refine(p, i);
  }

  Projection refine(Vec2 p, int argmin) const {
    const auto stationarity = [&](double t) {
      const auto [q, v] = curve_.point_and_velocity(t);
      return dot(p - q, v);
    };
    const auto dist2_at = [&](double t) { return norm2(p - curve_.point(t)); };

    const int last = n_;
    const double t_lo = ts_[static_cast<std::size_t>(std::max(0, argmin - 1))];
    const double t_mid = ts_[static_cast<std::size_t>(argmin)];
    const double t_hi = ts_[static_cast<std::size_t>(std::min(last, argmin + 1))];

    Projection best{t_mid, dist2_at(t_mid)};
    const auto consider = [&](double t) {
      const double d2 = dist2_at(t);
      if (d2 < best.dist2 - 1e-15 * (1.0 + best.dist2) ||
          (std::fabs(d2 - best.dist2) <= 1e-15 * (1.0 + best.dist2) &&
           t < best.t)) {
        best = {t, d2};
      }
    };

    const double f_lo = stationarity(t_lo);
    const double f_mid = stationarity(t_mid);
    const double f_hi = stationarity(t_hi);
    if (t_lo < t_mid && f_lo * f_mid <= 0.0)
      consider(solve_bracket(stationarity, t_lo, t_mid, f_lo, f_mid));
    if (t_mid < t_hi && f_mid * f_hi <= 0.0)
      consider(solve_bracket(stationarity, t_mid, t_hi, f_mid, f_hi));
    consider(t_lo);
    consider(t_hi);
    return best;
  }

  const Curve& curve() const { return curve_; }

 private:
  // Illinois-damped regula falsi with a bisection guarantee.
  template <typename F>
  static double solve_bracket(F&& f, double a, double b, double fa,
                              double fb) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    double side = 0.0;
    for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
      double m = (fa - fb == 0.0) ? 0.5 * (a + b)
                                  : (a * fb - b * fa) / (fb - fa);
      const double margin = 0.01 * (b - a);
      if (!(m > a + margin) || !(m < b - margin)) m = 0.5 * (a + b);
      const double fm = f(m);
      if (fm == 0.0) return m;
      if (fa * fm < 0.0) {
        b = m;
        fb = fm;
        if (side == -1.0) fa *= 0.5;
        side = -1.0;
      } else {
        a = m;
        fa = fm;
        if (side == 1.0) fb *= 0.5;
        side = 1.0;
      }
    }
    return 0.5 * (a + b);
  }

  Curve curve_;  // owned copy; a grid must outlive any caller's temporary
  int n_ = 0;
  double dt_ = 0.0;
  double speed_bound_ = 0.0;
  std::vector<double> ts_, xs_, ys_;
};

// Parameter of the point on the curve closest to p. Ties resolve toward
// smaller t.
inline double project_to_curve(const Curve& curve, Point2 p, int grid_n) {
  return CurveGrid(curve, grid_n).project(p).t;
}

// Composes the curve with a strictly increasing map phi defined on
// new_interval, phi(new_interval) = old interval.
inline Curve reparameterize(const Curve& curve, const Expression& phi,
                            ParamInterval new_interval) {
  if (phi.free_vars().size() != 1)
    throw DomainError("reparameterization map must have exactly one variable");
  const std::string& r = phi.free_vars()[0];

  constexpr int kGrid = 1000;
  double prev = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double t = new_interval.t_min +
                     new_interval.width() * i / static_cast<double>(kGrid);
    const double bound[1] = {t};
    const double v = phi.eval(std::span<const double>(bound, 1));
    if (i > 0 && !(v > prev))
      throw DomainError("reparameterization map is not strictly increasing");
    prev = v;
  }
  const double lo_bound[1] = {new_interval.t_min};
  const double hi_bound[1] = {new_interval.t_max};
  const double lo = phi.eval(std::span<const double>(lo_bound, 1));
  const double hi = phi.eval(std::span<const double>(hi_bound, 1));
  if (std::fabs(lo - curve.interval().t_min) > 1e-9 ||
      std::fabs(hi - curve.interval().t_max) > 1e-9)
    throw DomainError(
        "reparameterization map endpoints do not match the curve interval");

  return Curve(curve.mu1().substitute(curve.param_name(), phi),
               curve.mu2().substitute(curve.param_name(), phi), new_interval,
               r);
}

}  // namespace fidcurve
