#pragma once

#include "bfc/types.hpp"

#include <cmath>
#include <string>

namespace bfc {

/// Exponentially decaying performance envelope
///
///   rho(t) = exp(-mu t) (p - q) + q,
///
/// one half-width per dimension. The constrained error e must satisfy
/// -rho(t) < e < rho(t) elementwise (strictly).
class FunnelSpec {
 public:
  FunnelSpec() = default;

  FunnelSpec(Vec p, Vec q, Vec mu) : p_(std::move(p)), q_(std::move(q)), mu_(std::move(mu)) {
    validate();
  }

  /// Scalars broadcast to `n` dimensions.
  static FunnelSpec broadcast(double p, double q, double mu, Eigen::Index n) {
    return FunnelSpec(Vec::Constant(n, p), Vec::Constant(n, q), Vec::Constant(n, mu));
  }

  Eigen::Index dim() const { return p_.size(); }
  const Vec& p() const { return p_; }
  const Vec& q() const { return q_; }
  const Vec& mu() const { return mu_; }

  Vec eval(double t) const {
    detail::require_time(t, "FunnelSpec::eval");
    return ((-mu_ * t).array().exp() * (p_ - q_).array() + q_.array()).matrix();
  }

  /// d rho / dt = -mu (rho - q); non-positive everywhere.
  Vec rate(double t) const {
    detail::require_time(t, "FunnelSpec::rate");
    return (-mu_.array() * (p_ - q_).array() * (-mu_ * t).array().exp()).matrix();
  }

  /// eps_i = e_i / rho_i(t). Containment holds iff max |eps_i| < 1.
  Vec normalize(const Vec& e, double t) const {
    detail::require_dim(e.size(), dim(), "FunnelSpec::normalize");
    return (e.array() / eval(t).array()).matrix();
  }

  Containment contains(const Vec& e, double t) const {
    detail::require_dim(e.size(), dim(), "FunnelSpec::contains");
    const Vec rho = eval(t);
    Containment c;
    c.per_dim.resize(static_cast<std::size_t>(dim()));
    for (Eigen::Index i = 0; i < dim(); ++i) {
      const bool in = -rho[i] < e[i] && e[i] < rho[i];
      c.per_dim[static_cast<std::size_t>(i)] = in;
      c.all = c.all && in;
    }
    return c;
  }

  friend bool operator==(const FunnelSpec& a, const FunnelSpec& b) {
    return a.p_ == b.p_ && a.q_ == b.q_ && a.mu_ == b.mu_;
  }

 private:
  void validate() const {
    if (p_.size() == 0 || p_.size() != q_.size() || p_.size() != mu_.size()) {
      throw ConfigError("funnel: p, q, mu must be non-empty with equal dimension");
    }
    for (Eigen::Index i = 0; i < p_.size(); ++i) {
      if (!std::isfinite(p_[i]) || !std::isfinite(q_[i]) || !std::isfinite(mu_[i])) {
        throw ConfigError("funnel: non-finite parameter in dimension " + std::to_string(i + 1));
      }
      if (!(q_[i] > 0.0 && q_[i] < p_[i])) {
        throw ConfigError("funnel: require 0 < q < p in dimension " + std::to_string(i + 1));
      }
      if (!(mu_[i] > 0.0)) {
        throw ConfigError("funnel: require mu > 0 in dimension " + std::to_string(i + 1));
      }
    }
  }

  Vec p_;
  Vec q_;
  Vec mu_;
};

}  // namespace bfc
