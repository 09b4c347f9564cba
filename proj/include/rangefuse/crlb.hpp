#ifndef RANGEFUSE_CRLB_HPP
#define RANGEFUSE_CRLB_HPP

// Fisher information over (d, lambda) for one RSS reading plus the counts
// (M, P, Q), and the resulting Cramer-Rao bound on the distance.

#include <Eigen/Core>

#include <cmath>
#include <numbers>

#include "rangefuse/channel.hpp"
#include "rangefuse/connectivity.hpp"
#include "rangefuse/errors.hpp"

namespace rangefuse {

template <typename Scalar>
struct FisherInfo {
  Eigen::Matrix<Scalar, 2, 2> matrix;

  Scalar i_dd() const { return matrix(0, 0); }
  Scalar i_dl() const { return matrix(0, 1); }
  Scalar i_ll() const { return matrix(1, 1); }
  Scalar determinant() const { return matrix.determinant(); }
  bool positive_definite() const { return i_dd() > 0 && i_ll() > 0 && determinant() > 0; }
};

/// kappa = (10 alpha / (sigma_dB ln 10))^2, the RSS information per d^-2.
template <typename Scalar>
Scalar rss_information_coefficient(const ChannelParams<Scalar>& params) {
  if (!(params.sigma_db > 0)) throw DegenerateError("kappa: sigma_db must be positive");
  const Scalar k = Scalar(10) * params.alpha / (params.sigma_db * std::numbers::ln10_v<Scalar>);
  return k * k;
}

namespace detail {
template <typename Scalar>
void check_crlb_args(const FdModel<Scalar>& model, Scalar lambda, Scalar d) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw DomainError("fim: lambda must be positive");
  if (!(d > 0) || d > model.d_th()) throw DomainError("fim: d outside (0, d_th]");
}

template <typename Scalar>
void check_nonsingular(Scalar f, Scalar s) {
  if (!(f > 0) || !(f < s)) throw DegenerateError("fim: f(d) must lie strictly inside (0, S)");
}
}  // namespace detail

/// FIM with f and f' taken from the model segment containing d (left segment at knots).
template <typename Scalar>
FisherInfo<Scalar> fim(const ChannelParams<Scalar>& params, const FdModel<Scalar>& model, Scalar lambda, Scalar d) {
  detail::check_crlb_args(model, lambda, d);
  const Scalar kappa = rss_information_coefficient(params);
  const Scalar s = model.s_mass();
  const Scalar f = model.evaluate(d);
  const Scalar fp = model.slope(d);
  detail::check_nonsingular(f, s);
  FisherInfo<Scalar> info;
  info.matrix(0, 0) = lambda * fp * fp * (Scalar(1) / f + Scalar(2) / (s - f)) + kappa / (d * d);
  info.matrix(0, 1) = -fp;
  info.matrix(1, 0) = -fp;
  info.matrix(1, 1) = (Scalar(2) * s - f) / lambda;
  return info;
}

/// Closed-form bound with an explicit slope f'(d).
template <typename Scalar>
Scalar crlb_distance_with_slope(const ChannelParams<Scalar>& params, const FdModel<Scalar>& model, Scalar lambda,
                                Scalar d, Scalar slope) {
  detail::check_crlb_args(model, lambda, d);
  const Scalar kappa = rss_information_coefficient(params);
  const Scalar s = model.s_mass();
  const Scalar f = model.evaluate(d);
  detail::check_nonsingular(f, s);
  const Scalar conn = Scalar(2) * lambda * s * s * slope * slope / (f * (Scalar(2) * s - f) * (s - f));
  return Scalar(1) / (conn + kappa / (d * d));
}

template <typename Scalar>
Scalar crlb_distance(const ChannelParams<Scalar>& params, const FdModel<Scalar>& model, Scalar lambda, Scalar d) {
  return crlb_distance_with_slope(params, model, lambda, d, model.slope(d));
}

/// Central-difference f'(d) of the quadrature f, step d_th / 1e4; a
/// cross-check for the piecewise slope.
template <typename Scalar>
Scalar fd_slope_central(const ChannelParams<Scalar>& params, const FdModel<Scalar>& model, Scalar d,
                        Scalar quad_tol = Scalar(1e-8)) {
  const Scalar h = model.d_th() / Scalar(1e4);
  if (!(d >= h)) throw DomainError("fd_slope_central: d too close to 0");
  return (generic_f(params, d + h, quad_tol) - generic_f(params, d - h, quad_tol)) / (Scalar(2) * h);
}

}  // namespace rangefuse

#endif  // RANGEFUSE_CRLB_HPP
