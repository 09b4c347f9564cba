#ifndef RANGEFUSE_CHANNEL_HPP
#define RANGEFUSE_CHANNEL_HPP

// Log-normal shadowing channel: mean and sampled RSS, the RSS ranging
// estimator, the link-existence probability g(d) and the density of the
// RSS-based distance estimate.

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "rangefuse/errors.hpp"

namespace rangefuse {

/// Upper tail of the standard normal, Q(z) = P(Z > z).
template <typename Scalar>
Scalar gaussian_tail(Scalar z) {
  return Scalar(0.5) * std::erfc(z / std::numbers::sqrt2_v<Scalar>);
}

template <typename Scalar>
struct ChannelParams {
  Scalar p_ref_dbm = Scalar(-37.47);
  Scalar d0 = Scalar(1);
  Scalar alpha = Scalar(4);
  Scalar sigma_db = Scalar(4);
  Scalar rss_threshold_dbm = Scalar(-100);

  ChannelParams() = default;

  ChannelParams(Scalar p_ref, Scalar path_loss_exponent, Scalar shadowing_db, Scalar threshold_dbm,
                Scalar reference_distance = Scalar(1))
      : p_ref_dbm(p_ref),
        d0(reference_distance),
        alpha(path_loss_exponent),
        sigma_db(shadowing_db),
        rss_threshold_dbm(threshold_dbm) {
    validate();
  }

  /// Shadowing deviation in log10-distance units, sigma_dB / (10 alpha).
  Scalar sigma_r() const { return sigma_db / (Scalar(10) * alpha); }

  void validate() const {
    if (!(d0 > 0) || !std::isfinite(d0)) throw ConfigError("channel: d0 must be a positive finite distance");
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ConfigError("channel: alpha must be positive and finite");
    if (!(sigma_db >= 0) || !std::isfinite(sigma_db)) throw ConfigError("channel: sigma_db must be >= 0");
    if (!std::isfinite(p_ref_dbm) || !std::isfinite(rss_threshold_dbm))
      throw ConfigError("channel: p_ref_dbm and rss_threshold_dbm must be finite");
    if (!(rss_threshold_dbm < p_ref_dbm))
      throw ConfigError("channel: rss_threshold_dbm must be below p_ref_dbm (pseudo range would fall under d0)");
  }

  bool operator==(const ChannelParams&) const = default;
};

using ChannelParamsd = ChannelParams<double>;

template <typename Scalar>
struct RssObservation {
  Scalar value_dbm;
};

namespace detail {
template <typename Scalar>
void require_positive_distance(Scalar d, const char* what) {
  if (!(d > 0) || !std::isfinite(d)) throw DomainError(std::string(what) + ": distance must be positive and finite");
}
}  // namespace detail

template <typename Scalar>
Scalar mean_rss(const ChannelParams<Scalar>& params, Scalar d) {
  detail::require_positive_distance(d, "mean_rss");
  return params.p_ref_dbm - Scalar(10) * params.alpha * std::log10(d / params.d0);
}

template <typename Scalar, typename Rng>
RssObservation<Scalar> sample_rss(const ChannelParams<Scalar>& params, Scalar d, Rng& rng) {
  const Scalar mean = mean_rss(params, d);
  if (params.sigma_db == 0) return {mean};
  std::normal_distribution<Scalar> shadowing(Scalar(0), params.sigma_db);
  return {mean + shadowing(rng)};
}

template <typename Scalar>
Scalar estimate_distance_rss(const ChannelParams<Scalar>& params, RssObservation<Scalar> obs) {
  return params.d0 * std::pow(Scalar(10), (params.p_ref_dbm - obs.value_dbm) / (Scalar(10) * params.alpha));
}

/// Distance at which the mean RSS equals the link threshold (g(r) = 1/2).
template <typename Scalar>
Scalar pseudo_range(const ChannelParams<Scalar>& params) {
  if (!(params.rss_threshold_dbm < params.p_ref_dbm))
    throw ConfigError("pseudo_range: rss_threshold_dbm must be below p_ref_dbm");
  return params.d0 *
         std::pow(Scalar(10), (params.p_ref_dbm - params.rss_threshold_dbm) / (Scalar(10) * params.alpha));
}

namespace detail {
// g(d) with a precomputed pseudo range; d == 0 is admitted (g = 1).
template <typename Scalar>
Scalar link_probability_at(const ChannelParams<Scalar>& params, Scalar range, Scalar d) {
  if (d <= 0) return Scalar(1);
  if (params.sigma_db == 0) return d <= range ? Scalar(1) : Scalar(0);
  return gaussian_tail(Scalar(10) * params.alpha * std::log10(d / range) / params.sigma_db);
}
}  // namespace detail

template <typename Scalar>
Scalar link_probability(const ChannelParams<Scalar>& params, Scalar d) {
  detail::require_positive_distance(d, "link_probability");
  return detail::link_probability_at(params, pseudo_range(params), d);
}

/// Density of the RSS-based estimate d_R given the true distance (lognormal).
template <typename Scalar>
Scalar rss_estimate_pdf(const ChannelParams<Scalar>& params, Scalar d_true, Scalar x) {
  detail::require_positive_distance(d_true, "rss_estimate_pdf");
  detail::require_positive_distance(x, "rss_estimate_pdf");
  if (params.sigma_db == 0) throw DegenerateError("rss_estimate_pdf: sigma_db = 0 has no density");
  const Scalar s = params.sigma_r();
  const Scalar l = std::log10(x / d_true);
  const Scalar ln10 = std::numbers::ln10_v<Scalar>;
  return std::exp(-l * l / (Scalar(2) * s * s)) /
         (std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * s * x * ln10);
}

/// Closed-form RMSE of d_R divided by d: sqrt(e^{2s^2} - 2 e^{s^2/2} + 1), s = sigma_r ln 10.
template <typename Scalar>
Scalar rss_relative_rmse(const ChannelParams<Scalar>& params) {
  const Scalar s = params.sigma_r() * std::numbers::ln10_v<Scalar>;
  return std::sqrt(std::exp(Scalar(2) * s * s) - Scalar(2) * std::exp(s * s / Scalar(2)) + Scalar(1));
}

}  // namespace rangefuse

#endif  // RANGEFUSE_CHANNEL_HPP
