#ifndef RANGEFUSE_ESTIMATE_HPP
#define RANGEFUSE_ESTIMATE_HPP

// Single-pair pipeline shared by the CLI, the dataset evaluator and the
// simulator: RSS estimate, connectivity estimate, fused estimate and CRLB.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <type_traits>

#include "rangefuse/channel.hpp"
#include "rangefuse/connectivity.hpp"
#include "rangefuse/crlb.hpp"
#include "rangefuse/fusion.hpp"

namespace rangefuse {

template <typename Scalar>
struct EstimateRecord {
  Scalar rss_estimate = 0;
  Scalar conn_estimate = 0;
  Scalar fused_estimate = 0;
  Scalar crlb = std::numeric_limits<Scalar>::quiet_NaN();  ///< variance bound at the fused estimate
  Scalar lambda = 0;                                        ///< intensity used for sigma_c
  Scalar sigma_c = std::numeric_limits<Scalar>::infinity();
  SolverStatus status = SolverStatus::newton_converged;
  bool rss_used = true;  ///< false when the reading fell below the link threshold
  std::optional<Scalar> true_distance;
};

enum class RssGate {
  none,             ///< use the reading whatever its level
  below_threshold,  ///< readings under rss_threshold_dbm carry no RSS information
};

template <typename Scalar>
Scalar plugin_distance(const FdModel<Scalar>& model, Scalar conn_estimate) {
  return std::clamp(conn_estimate, Scalar(1e-9) * model.d_th(), model.d_th());
}

/// lambda: known intensity, or nullopt for the (2M + P + Q) / (2S) estimate.
template <typename Scalar>
EstimateRecord<Scalar> estimate_pair(const ChannelParams<Scalar>& params, const FdModel<Scalar>& model,
                                     RssObservation<Scalar> rss, const NeighborCounts& counts,
                                     std::type_identity_t<std::optional<Scalar>> lambda,
                                     const SolverSettings<Scalar>& settings,
                                     RssGate gate = RssGate::below_threshold) {
  EstimateRecord<Scalar> rec;
  rec.rss_estimate = estimate_distance_rss(params, rss);
  rec.conn_estimate = estimate_distance_conn(model, counts);
  rec.lambda = lambda.value_or(estimate_lambda(model, counts));
  rec.rss_used = !(gate == RssGate::below_threshold && rss.value_dbm < params.rss_threshold_dbm);

  const Scalar d_th = model.d_th();
  if (rec.lambda > 0) rec.sigma_c = conn_error_sigma(model, rec.lambda, plugin_distance(model, rec.conn_estimate));

  if (rec.rss_used && params.sigma_db == 0) {
    // Noiseless RSS pins the distance; only the domain bound applies.
    rec.fused_estimate = std::clamp(rec.rss_estimate, Scalar(1e-9) * d_th, d_th);
    rec.status = rec.rss_estimate > d_th ? SolverStatus::boundary_clamped : SolverStatus::newton_converged;
  } else {
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    const FusionInput<Scalar> in{rec.rss_estimate, rec.conn_estimate, rec.rss_used ? params.sigma_r() : inf,
                                 rec.sigma_c, d_th};
    if (!std::isfinite(in.sigma_r) && !std::isfinite(in.sigma_c)) {
      rec.fused_estimate = plugin_distance(model, rec.conn_estimate);
      rec.status = SolverStatus::fallback_grid;
    } else {
      const auto fused = fuse_mle(in, settings);
      rec.fused_estimate = fused.distance;
      rec.status = fused.status;
    }
  }

  if (params.sigma_db > 0 && rec.lambda > 0) {
    try {
      rec.crlb = crlb_distance(params, model, rec.lambda, rec.fused_estimate);
    } catch (const DomainError&) {
      // f(d) outside (0, S): the bound does not exist at this point.
    }
  }
  return rec;
}

}  // namespace rangefuse

#endif  // RANGEFUSE_ESTIMATE_HPP
