#ifndef RANGEFUSE_CONNECTIVITY_HPP
#define RANGEFUSE_CONNECTIVITY_HPP

// Connectivity-based ranging: the neighborhood mass S, the common-neighbor
// mass f(d) under the unit-disk and log-normal channels, the piecewise-linear
// model of f with its inverse, and the error model of the resulting estimate.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rangefuse/channel.hpp"
#include "rangefuse/errors.hpp"
#include "rangefuse/quadrature.hpp"

namespace rangefuse {

/// Common (m) and exclusive (p for A, q for B) immediate-neighbor counts of a pair.
struct NeighborCounts {
  std::int64_t m = 0;
  std::int64_t p = 0;
  std::int64_t q = 0;

  bool empty() const { return m == 0 && p == 0 && q == 0; }
  bool operator==(const NeighborCounts&) const = default;
};

/// Lens area of two radius-r disks whose centers are d apart.
template <typename Scalar>
Scalar unit_disk_f(Scalar r, Scalar d) {
  if (!(r > 0)) throw DomainError("unit_disk_f: r must be positive");
  if (!(d >= 0) || d > Scalar(2) * r) throw DomainError("unit_disk_f: d must lie in [0, 2r]");
  const Scalar s = std::numbers::pi_v<Scalar> * r * r;
  const Scalar f = Scalar(2) * s / std::numbers::pi_v<Scalar> * std::acos(d / (Scalar(2) * r)) -
                   d * std::sqrt(std::max(Scalar(0), r * r - d * d / Scalar(4)));
  return std::max(Scalar(0), f);
}

namespace detail {

// g evaluated from a squared distance; avoids a sqrt in the quadrature kernels.
template <typename Scalar>
class SquaredLinkProbability {
 public:
  explicit SquaredLinkProbability(const ChannelParams<Scalar>& params)
      : range_sq_(pseudo_range(params) * pseudo_range(params)),
        step_(params.sigma_db == 0),
        coef_(step_ ? Scalar(0)
                    : Scalar(10) * params.alpha /
                          (params.sigma_db * std::numbers::sqrt2_v<Scalar> * Scalar(2) *
                           std::numbers::ln10_v<Scalar>)) {}

  Scalar operator()(Scalar dist_sq) const {
    if (dist_sq <= 0) return Scalar(1);
    if (step_) return dist_sq <= range_sq_ ? Scalar(1) : Scalar(0);
    return Scalar(0.5) * std::erfc(coef_ * std::log(dist_sq / range_sq_));
  }

 private:
  Scalar range_sq_;
  bool step_;
  Scalar coef_;
};

// Smallest d in [lo, hi] with g(d) <= level, by bisection (g is nonincreasing).
template <typename Scalar>
Scalar link_level_crossing(const ChannelParams<Scalar>& params, Scalar level, Scalar hi_factor) {
  const Scalar r = pseudo_range(params);
  if (params.sigma_db == 0) return r;
  Scalar lo = r;
  Scalar hi = hi_factor * r;
  if (detail::link_probability_at(params, r, hi) > level)
    throw NumericError("link probability stays above " + std::to_string(level) + " beyond " +
                       std::to_string(hi) + " m; shadowing too strong for the search bracket");
  for (int i = 0; i < 200 && hi - lo > std::numeric_limits<Scalar>::epsilon() * hi; ++i) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    if (detail::link_probability_at(params, r, mid) <= level)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

template <typename Scalar>
Scalar mass_scale(const ChannelParams<Scalar>& params) {
  const Scalar r = pseudo_range(params);
  return std::numbers::pi_v<Scalar> * r * r;
}

}  // namespace detail

/// Radius beyond which g(d) <= 1e-12; the quadrature truncation point.
template <typename Scalar>
Scalar support_radius(const ChannelParams<Scalar>& params) {
  return detail::link_level_crossing(params, Scalar(1e-12), Scalar(1e6));
}

/// Distance cutoff d_th: the smallest d with g(d) <= 1e-3 (bisection on [r, 100r]).
template <typename Scalar>
Scalar threshold_distance(const ChannelParams<Scalar>& params) {
  return detail::link_level_crossing(params, Scalar(1e-3), Scalar(100));
}

/// S = 2 pi * integral of g(u) u du, the expected neighbor mass per unit intensity.
template <typename Scalar>
Scalar generic_s(const ChannelParams<Scalar>& params, Scalar quad_tol = Scalar(1e-6)) {
  if (!(quad_tol > 0)) throw DomainError("generic_s: quad_tol must be positive");
  const Scalar r = pseudo_range(params);
  if (params.sigma_db == 0) return std::numbers::pi_v<Scalar> * r * r;
  const detail::SquaredLinkProbability<Scalar> g(params);
  const Scalar reach = support_radius(params);
  const auto result = integrate_gk15([&](Scalar u) { return g(u * u) * u; }, std::vector<Scalar>{0, r, reach},
                                     quad_tol, quad_tol * Scalar(1e-6) * r * r);
  return Scalar(2) * std::numbers::pi_v<Scalar> * result.value;
}

/// f(d): integral over the plane of g(|x - A|) g(|x - B|) with |AB| = d.
/// Polar coordinates about the midpoint of AB; one quadrant times four.
template <typename Scalar>
Scalar generic_f(const ChannelParams<Scalar>& params, Scalar d, Scalar quad_tol = Scalar(1e-6)) {
  if (!(d >= 0) || !std::isfinite(d)) throw DomainError("generic_f: d must be >= 0");
  if (!(quad_tol > 0)) throw DomainError("generic_f: quad_tol must be positive");
  const Scalar r = pseudo_range(params);
  if (params.sigma_db == 0) return d >= Scalar(2) * r ? Scalar(0) : unit_disk_f(r, d);

  const detail::SquaredLinkProbability<Scalar> g(params);
  const Scalar half = d / Scalar(2);
  const Scalar rho_max = half + support_radius(params);
  const Scalar abs_floor = quad_tol * Scalar(1e-6) * detail::mass_scale(params);

  auto radial = [&](Scalar theta) {
    const Scalar c = std::cos(theta);
    const Scalar dc = d * c;
    // Radii where the distance to A or to B equals r: the sharp part of the integrand.
    std::vector<Scalar> breaks{Scalar(0), rho_max};
    const Scalar disc = dc * dc - d * d + Scalar(4) * r * r;
    if (disc >= 0) {
      const Scalar root = std::sqrt(disc);
      for (Scalar rho : {(-dc + root) / 2, (-dc - root) / 2, (dc + root) / 2, (dc - root) / 2})
        if (rho > 0 && rho < rho_max) breaks.push_back(rho);
    }
    std::sort(breaks.begin(), breaks.end());
    auto kernel = [&](Scalar rho) {
      const Scalar base = rho * rho + half * half;
      const Scalar cross = rho * dc;
      return g(base + cross) * g(base - cross) * rho;
    };
    return integrate_gk15(kernel, breaks, quad_tol / Scalar(10), abs_floor / Scalar(10)).value;
  };
  const auto outer =
      integrate_gk15(radial, Scalar(0), std::numbers::pi_v<Scalar> / Scalar(2), quad_tol, abs_floor);
  return Scalar(4) * outer.value;
}

/// Tabulated f(d) on [0, d_th] with affine interpolation between knots.
template <typename Scalar>
class FdModel {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  FdModel(Scalar s_mass, Vector distances, Vector values)
      : s_mass_(s_mass), d_(std::move(distances)), f_(std::move(values)) {
    const Eigen::Index n = d_.size();
    if (n < 2 || f_.size() != n) throw ModelError("FdModel: need at least two knots with matching values");
    if (d_(0) != 0) throw ModelError("FdModel: first knot must sit at d = 0");
    if (!(s_mass_ > 0) || !std::isfinite(s_mass_)) throw ModelError("FdModel: S must be positive");
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      if (!(d_(i + 1) > d_(i))) throw ModelError("FdModel: knot distances must increase strictly");
      if (!(f_(i + 1) < f_(i)))
        throw ModelError("FdModel: f must decrease strictly between knots " + std::to_string(i) + " and " +
                         std::to_string(i + 1));
    }
    if (!(f_(n - 1) > 0)) throw ModelError("FdModel: f(d_th) must be positive");
    if (f_(0) > s_mass_ * (1 + Scalar(1e-9))) throw ModelError("FdModel: f(0) exceeds S");
    k_ = (f_.tail(n - 1) - f_.head(n - 1)).cwiseQuotient(d_.tail(n - 1) - d_.head(n - 1));
    b_ = f_.head(n - 1) - k_.cwiseProduct(d_.head(n - 1));
  }

  Scalar s_mass() const { return s_mass_; }
  Scalar d_th() const { return d_(d_.size() - 1); }
  Eigen::Index num_knots() const { return d_.size(); }
  const Vector& distances() const { return d_; }
  const Vector& values() const { return f_; }
  const Vector& slopes() const { return k_; }
  const Vector& intercepts() const { return b_; }
  Scalar f_zero() const { return f_(0); }
  Scalar f_th() const { return f_(f_.size() - 1); }

  /// Segment i with d in (d_i, d_{i+1}]; a knot belongs to the segment on its left.
  Eigen::Index segment(Scalar d) const {
    const Scalar* first = d_.data() + 1;
    const Scalar* last = d_.data() + d_.size();
    const Scalar* it = std::lower_bound(first, last, d);
    if (it == last) return k_.size() - 1;
    return static_cast<Eigen::Index>(it - first);
  }

  Scalar evaluate(Scalar d) const {
    if (!(d >= 0) || d > d_th()) throw DomainError("FdModel::evaluate: d outside [0, d_th]");
    const Eigen::Index i = segment(d);
    if (d == d_(i + 1)) return f_(i + 1);
    if (d == d_(i)) return f_(i);
    return f_(i) + k_(i) * (d - d_(i));
  }

  Scalar slope(Scalar d) const { return k_(segment(d)); }

 private:
  Scalar s_mass_;
  Vector d_;
  Vector f_;
  Vector k_;
  Vector b_;
};

using FdModeld = FdModel<double>;

/// Tabulates generic_f at n_knots points spaced uniformly on [0, d_th].
template <typename Scalar>
FdModel<Scalar> build_fd_model(const ChannelParams<Scalar>& params, int n_knots = 64,
                               Scalar quad_tol = Scalar(1e-6)) {
  if (n_knots < 8) throw ConfigError("build_fd_model: n_knots must be >= 8");
  if (!(quad_tol > 0)) throw ConfigError("build_fd_model: quad_tol must be positive");
  params.validate();
  const Scalar s = generic_s(params, quad_tol);
  const Scalar d_th = threshold_distance(params);
  using Vector = typename FdModel<Scalar>::Vector;
  Vector d = Vector::LinSpaced(n_knots, Scalar(0), d_th);
  d(n_knots - 1) = d_th;
  Vector f(n_knots);
  for (int i = 0; i < n_knots; ++i) f(i) = generic_f(params, d(i), quad_tol);
  return FdModel<Scalar>(s, std::move(d), std::move(f));
}

/// Piecewise-linear f^{-1}, clamped to [0, d_th].
template <typename Scalar>
Scalar invert_fd(const FdModel<Scalar>& model, Scalar value) {
  const auto& f = model.values();
  const auto& d = model.distances();
  if (value >= model.f_zero()) return Scalar(0);
  if (value <= model.f_th()) return model.d_th();
  // First knot whose value is <= value; f is strictly decreasing.
  const Scalar* first = f.data();
  const Scalar* last = f.data() + f.size();
  const Scalar* it = std::lower_bound(first, last, value, std::greater<Scalar>());
  const Eigen::Index j = it - first;
  if (f(j) == value) return d(j);
  const Eigen::Index i = j - 1;
  return d(i) + (value - f(i)) / model.slopes()(i);
}

template <typename Scalar>
Scalar neighbor_ratio(const NeighborCounts& counts) {
  const auto total = 2 * counts.m + counts.p + counts.q;
  return Scalar(2 * counts.m) / Scalar(total);
}

template <typename Scalar>
Scalar estimate_distance_conn(const FdModel<Scalar>& model, const NeighborCounts& counts) {
  if (counts.m < 0 || counts.p < 0 || counts.q < 0) throw DomainError("neighbor counts must be nonnegative");
  if (counts.empty()) return Scalar(0);
  return invert_fd(model, neighbor_ratio<Scalar>(counts) * model.s_mass());
}

/// Moment estimate of the intensity, (2M + P + Q) / (2S).
template <typename Scalar>
Scalar estimate_lambda(const FdModel<Scalar>& model, const NeighborCounts& counts) {
  return Scalar(2 * counts.m + counts.p + counts.q) / (Scalar(2) * model.s_mass());
}

/// Standard deviation of the connectivity estimate under the normal
/// approximation, with f and its slope read from the model at d_plugin.
template <typename Scalar>
Scalar conn_error_sigma(const FdModel<Scalar>& model, Scalar lambda, Scalar d_plugin) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw DomainError("conn_error_sigma: lambda must be positive");
  if (!(d_plugin > 0) || d_plugin > model.d_th()) throw DomainError("conn_error_sigma: d outside (0, d_th]");
  const Scalar f = model.evaluate(d_plugin);
  const Scalar k = model.slope(d_plugin);
  if (!(f > 0)) throw DegenerateError("conn_error_sigma: f(d) = 0");
  if (k == 0) throw DegenerateError("conn_error_sigma: flat segment");
  return f / std::abs(k) *
         std::sqrt(Scalar(1) / (Scalar(2) * lambda * f) + Scalar(1) / (Scalar(2) * lambda * model.s_mass()));
}

template <typename Scalar>
Scalar conn_estimate_pdf(const FdModel<Scalar>& model, Scalar lambda, Scalar d_true, Scalar x) {
  const Scalar sigma = conn_error_sigma(model, lambda, d_true);
  const Scalar z = (x - d_true) / sigma;
  return std::exp(-z * z / Scalar(2)) / (std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * sigma);
}

}  // namespace rangefuse

#endif  // RANGEFUSE_CONNECTIVITY_HPP
