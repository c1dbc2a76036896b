#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "fidcurve/errors.hpp"
#include "fidcurve/expr.hpp"
#include "fidcurve/geometry.hpp"

namespace fidcurve {

// Weight families for the restricted-model density. Each one maps a curve
// point and its velocity to a nonnegative factor w(t); the restricted
// density is then f(x - mu(t)) * w(t) up to normalization.

// w(t) = |mu'(t)|, the arc-length (pushforward-invariant) weight.
struct JeffreysPrior {};

// w(t) = |c . mu'(t)|, induced by tracking the scalar c . theta. A zero c
// is accepted here; it yields a weight that is identically zero and the
// normalizer reports the degenerate mass downstream.
struct LinearPrior {
  Vec2 c;
  explicit LinearPrior(Vec2 c_in) : c(c_in) {
    if (!(std::isfinite(c.x) && std::isfinite(c.y))) {
      throw DomainError("linear weight coefficients must be finite");
    }
  }
};

// w(t) = |mu1'(t) d2 - mu2'(t) d1|, induced by slab conditioning along the
// direction d.
struct ShiftPrior {
  Vec2 d;
  explicit ShiftPrior(Vec2 d_in) : d(d_in) {
    if (!(std::isfinite(d.x) && std::isfinite(d.y))) {
      throw DomainError("shift direction must be finite");
    }
    if (d.x == 0.0 && d.y == 0.0) {
      throw DomainError("shift direction must not be the zero vector");
    }
  }
};

enum class ConditionMode { AsPaper, Coarea };

// Weight built from a scalar constraint C(theta1, theta2) whose zero set
// contains the curve. AsPaper multiplies |grad C| and speed; Coarea divides
// speed by |grad C| so the weight matches the coarea-corrected surface
// measure.
class ConditionPrior {
 public:
  ConditionPrior(Expression constraint, ConditionMode mode)
      : constraint_(std::move(constraint)), mode_(mode) {
    for (const std::string& v : constraint_.free_vars()) {
      if (v != "theta1" && v != "theta2") {
        throw DomainError("condition expression may only use theta1 and theta2, got '" +
                          v + "'");
      }
    }
    slot1_ = slot2_ = -1;
    const auto& vars = constraint_.free_vars();
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i] == "theta1") slot1_ = static_cast<int>(i);
      if (vars[i] == "theta2") slot2_ = static_cast<int>(i);
    }
    nvars_ = static_cast<int>(vars.size());
  }

  Vec2 gradient(Point2 theta) const {
    double args[2] = {0.0, 0.0};
    if (slot1_ >= 0) args[slot1_] = theta.x;
    if (slot2_ >= 0) args[slot2_] = theta.y;
    const std::span<const double> a(args, static_cast<std::size_t>(nvars_));
    Vec2 g{0.0, 0.0};
    if (slot1_ >= 0) g.x = constraint_.eval_dual(a, slot1_).der;
    if (slot2_ >= 0) g.y = constraint_.eval_dual(a, slot2_).der;
    return g;
  }

  double value(Point2 theta) const {
    double args[2] = {0.0, 0.0};
    if (slot1_ >= 0) args[slot1_] = theta.x;
    if (slot2_ >= 0) args[slot2_] = theta.y;
    return constraint_.eval(
        std::span<const double>(args, static_cast<std::size_t>(nvars_)));
  }

  const Expression& constraint() const { return constraint_; }
  ConditionMode mode() const { return mode_; }

 private:
  Expression constraint_;
  ConditionMode mode_;
  int slot1_;
  int slot2_;
  int nvars_;
};

using PriorWeight =
    std::variant<JeffreysPrior, LinearPrior, ShiftPrior, ConditionPrior>;

// Weight evaluated from an already-computed curve point and velocity. mu is
// the point mu(t), vel is mu'(t).
inline double prior_weight(const PriorWeight& prior, Point2 mu, Vec2 vel,
                           double t) {
  struct Visitor {
    Point2 mu;
    Vec2 vel;
    double t;
    double operator()(const JeffreysPrior&) const { return norm(vel); }
    double operator()(const LinearPrior& p) const {
      return std::abs(dot(p.c, vel));
    }
    double operator()(const ShiftPrior& p) const {
      return std::abs(cross(vel, p.d));
    }
    double operator()(const ConditionPrior& p) const {
      const double g = norm(p.gradient(mu));
      const double speed = norm(vel);
      if (p.mode() == ConditionMode::AsPaper) return g * speed;
      if (g <= 1e-300) throw SingularConditionError(t);
      return speed / g;
    }
  };
  return std::visit(Visitor{mu, vel, t}, prior);
}

inline double prior_weight(const PriorWeight& prior, const Curve& curve,
                           double t) {
  const auto [mu, vel] = curve.point_and_velocity(t);
  return prior_weight(prior, mu, vel, t);
}

}  // namespace fidcurve
