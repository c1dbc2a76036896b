#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "fidcurve/errors.hpp"
#include "fidcurve/geometry.hpp"
#include "fidcurve/rng.hpp"

namespace fidcurve {

// Mean-zero bivariate Gaussian error law with a fixed covariance matrix.
// The covariance must be symmetric positive definite; this is checked once
// at construction via the Cholesky factorization that density evaluation
// and sampling both reuse.
class GaussianNoise {
 public:
  // cov is row-major {{s11, s12}, {s21, s22}}.
  explicit GaussianNoise(const std::array<std::array<double, 2>, 2>& cov) {
    const double a = cov[0][0];
    const double b = cov[0][1];
    const double b2 = cov[1][0];
    const double c = cov[1][1];
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(b2) &&
          std::isfinite(c))) {
      throw DomainError("covariance entries must be finite");
    }
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1.0});
    if (std::abs(b - b2) > 1e-12 * scale) {
      throw DomainError("covariance matrix must be symmetric");
    }
    if (!(a > 0.0)) {
      throw DomainError("covariance matrix must be positive definite");
    }
    l11_ = std::sqrt(a);
    l21_ = 0.5 * (b + b2) / l11_;
    const double rem = c - l21_ * l21_;
    if (!(rem > 0.0)) {
      throw DomainError("covariance matrix must be positive definite");
    }
    l22_ = std::sqrt(rem);
    log_norm_ = -std::log(2.0 * kPi) - std::log(l11_) - std::log(l22_);
  }

  static GaussianNoise isotropic(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw DomainError("sigma must be positive and finite");
    }
    return GaussianNoise({{{sigma * sigma, 0.0}, {0.0, sigma * sigma}}});
  }

  double log_density(Vec2 v) const {
    // Whitened coordinates y = L^{-1} v give v' Sigma^{-1} v = |y|^2.
    const double y1 = v.x / l11_;
    const double y2 = (v.y - l21_ * y1) / l22_;
    return log_norm_ - 0.5 * (y1 * y1 + y2 * y2);
  }

  double density(Vec2 v) const { return std::exp(log_density(v)); }

  // One draw of the error vector u.
  Vec2 sample(Rng& rng) const {
    const NormalPair z = standard_normal_pair(rng);
    return {l11_ * z.z0, l21_ * z.z0 + l22_ * z.z1};
  }

  std::vector<Vec2> sample(Rng& rng, std::size_t n) const {
    std::vector<Vec2> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample(rng));
    return out;
  }

  // Lower-triangular Cholesky factor entries, Sigma = L L'.
  double l11() const { return l11_; }
  double l21() const { return l21_; }
  double l22() const { return l22_; }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  double l11_;
  double l21_;
  double l22_;
  double log_norm_;
};

}  // namespace fidcurve
