#pragma once

#include "bfc/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace bfc {

enum class TransformKind {
  saturation_tanh,
  saturation_logistic,
  saturation_smooth,
  zeroing_sine_gauss,
  zeroing_poly_sine_gauss,
};

inline constexpr std::array<std::string_view, 5> kTransformKindNames = {
    "saturation_tanh", "saturation_logistic", "saturation_smooth", "zeroing_sine_gauss",
    "zeroing_poly_sine_gauss"};

inline std::string_view to_string(TransformKind k) {
  return kTransformKindNames[static_cast<std::size_t>(k)];
}

inline std::optional<TransformKind> transform_kind_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTransformKindNames.size(); ++i) {
    if (kTransformKindNames[i] == name) return static_cast<TransformKind>(i);
  }
  return std::nullopt;
}

inline bool is_zeroing(TransformKind k) {
  return k == TransformKind::zeroing_sine_gauss || k == TransformKind::zeroing_poly_sine_gauss;
}

namespace detail {

// Shape functions in the scaled variable u = a s (amplitude c factored out).
inline double smooth_shape(double u) { return std::tanh(u) * -std::expm1(-u * u); }
inline double smooth_shape_d(double u) {
  const double th = std::tanh(u);
  const double g = std::exp(-u * u);
  return (1.0 - th * th) * (1.0 - g) + th * 2.0 * u * g;
}
inline double sine_gauss_shape(double u) { return std::sin(u) * std::exp(-u * u); }
inline double sine_gauss_shape_d(double u) {
  return (std::cos(u) - 2.0 * u * std::sin(u)) * std::exp(-u * u);
}
inline double poly_sine_gauss_shape(double u) { return u * u * std::sin(u) * std::exp(-u * u); }
inline double poly_sine_gauss_shape_d(double u) {
  return (2.0 * u * std::sin(u) + u * u * std::cos(u) - 2.0 * u * u * u * std::sin(u)) *
         std::exp(-u * u);
}

// sup |f| over [lo, hi]: coarse grid, then golden-section refinement around
// the best grid point.
template <class F>
double sup_abs(F&& f, double lo, double hi) {
  constexpr int kGrid = 4000;
  const double h = (hi - lo) / kGrid;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = std::abs(f(lo + i * h));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + std::max(best - 1, 0) * h;
  double b = lo + std::min(best + 1, kGrid) * h;
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double f1 = std::abs(f(x1));
  double f2 = std::abs(f(x2));
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = std::abs(f(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = std::abs(f(x1));
    }
  }
  return std::max({best_val, f1, f2});
}

}  // namespace detail

/// Bounded transformation function applied elementwise to normalized errors.
///
/// Saturation kinds plateau at +-1 once |s| >= 1 (approximately, for the
/// smooth instantiations) and stay nondecreasing on the whole real line.
/// Zeroing kinds pass through +-1 near s = +-1 and decay back to 0 as
/// |s| grows, so commands vanish far outside the funnel.
class Transform {
 public:
  Transform() = default;

  static Transform saturation_tanh(double a = 5.0) {
    return Transform(TransformKind::saturation_tanh, a, 1.0);
  }
  static Transform saturation_logistic(double a = 5.0) {
    return Transform(TransformKind::saturation_logistic, a, 1.0);
  }
  static Transform saturation_smooth(double a = 5.0) {
    return Transform(TransformKind::saturation_smooth, a, 1.0);
  }
  static Transform zeroing_sine_gauss(double c = 2.52, double a = 0.656) {
    return Transform(TransformKind::zeroing_sine_gauss, a, c);
  }
  static Transform zeroing_poly_sine_gauss(double c = 3.1, double a = 1.125) {
    return Transform(TransformKind::zeroing_poly_sine_gauss, a, c);
  }

  /// Generic factory; `c` is ignored for saturation kinds. Missing values
  /// take the defaults for the kind.
  static Transform make(TransformKind kind, std::optional<double> a = std::nullopt,
                        std::optional<double> c = std::nullopt) {
    switch (kind) {
      case TransformKind::saturation_tanh:
        return saturation_tanh(a.value_or(5.0));
      case TransformKind::saturation_logistic:
        return saturation_logistic(a.value_or(5.0));
      case TransformKind::saturation_smooth:
        return saturation_smooth(a.value_or(5.0));
      case TransformKind::zeroing_sine_gauss:
        return zeroing_sine_gauss(c.value_or(2.52), a.value_or(0.656));
      case TransformKind::zeroing_poly_sine_gauss:
        return zeroing_poly_sine_gauss(c.value_or(3.1), a.value_or(1.125));
    }
    throw ConfigError("transform: unknown kind");
  }

  TransformKind kind() const { return kind_; }
  double a() const { return a_; }
  /// Amplitude coefficient (1 for saturation kinds).
  double c() const { return c_; }
  bool zeroing() const { return is_zeroing(kind_); }

  double operator()(double s) const {
    if (!std::isfinite(s)) throw DomainError("Transform: non-finite argument");
    const double u = a_ * s;
    double y = 0.0;
    switch (kind_) {
      case TransformKind::saturation_tanh:
        y = std::tanh(u);
        break;
      case TransformKind::saturation_logistic:
        // (e^u - 1)/(e^u + 1) == tanh(u/2), without overflow for large u.
        y = std::tanh(0.5 * u);
        break;
      case TransformKind::saturation_smooth:
        y = detail::smooth_shape(u);
        break;
      case TransformKind::zeroing_sine_gauss:
        y = c_ * detail::sine_gauss_shape(u);
        break;
      case TransformKind::zeroing_poly_sine_gauss:
        y = c_ * detail::poly_sine_gauss_shape(u);
        break;
    }
    // Re-normalized zeroing amplitudes can overshoot 1 by O(1e-5) just past
    // s = 1; the command bound must hold regardless.
    return std::clamp(y, -1.0, 1.0);
  }

  Vec apply(const Vec& s) const {
    Vec out(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = (*this)(s[i]);
    return out;
  }

  /// Analytic slope at s = 0.
  double slope_at_zero() const {
    switch (kind_) {
      case TransformKind::saturation_tanh:
        return a_;
      case TransformKind::saturation_logistic:
        return 0.5 * a_;
      case TransformKind::saturation_smooth:
        return 0.0;
      case TransformKind::zeroing_sine_gauss:
        return c_ * a_;
      case TransformKind::zeroing_poly_sine_gauss:
        return 0.0;
    }
    return 0.0;
  }

  /// Global Lipschitz constant sup |Psi'(s)|. Closed form for the tanh
  /// family, numerical supremum of the analytic derivative otherwise.
  double lipschitz() const {
    switch (kind_) {
      case TransformKind::saturation_tanh:
        return a_;
      case TransformKind::saturation_logistic:
        return 0.5 * a_;
      case TransformKind::saturation_smooth:
        return a_ * detail::sup_abs(detail::smooth_shape_d, 0.0, 8.0);
      case TransformKind::zeroing_sine_gauss:
        return c_ * a_ * detail::sup_abs(detail::sine_gauss_shape_d, 0.0, 8.0);
      case TransformKind::zeroing_poly_sine_gauss:
        return c_ * a_ * detail::sup_abs(detail::poly_sine_gauss_shape_d, 0.0, 8.0);
    }
    return 0.0;
  }

  /// Copy with `c` rescaled so that Psi(1) = 1 to machine precision.
  /// Identity for saturation kinds.
  Transform renormalized() const {
    if (!zeroing()) return *this;
    const double shape = kind_ == TransformKind::zeroing_sine_gauss
                             ? detail::sine_gauss_shape(a_)
                             : detail::poly_sine_gauss_shape(a_);
    Transform t = *this;
    t.c_ = 1.0 / shape;
    return t;
  }

  friend bool operator==(const Transform& x, const Transform& y) {
    return x.kind_ == y.kind_ && x.a_ == y.a_ && x.c_ == y.c_;
  }

 private:
  Transform(TransformKind kind, double a, double c) : kind_(kind), a_(a), c_(c) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw ConfigError(std::string("transform ") + std::string(to_string(kind)) + ": require a > 0");
    }
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ConfigError(std::string("transform ") + std::string(to_string(kind)) + ": require c > 0");
    }
  }

  TransformKind kind_ = TransformKind::saturation_smooth;
  double a_ = 5.0;
  double c_ = 1.0;
};

}  // namespace bfc
