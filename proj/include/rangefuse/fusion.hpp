#ifndef RANGEFUSE_FUSION_HPP
#define RANGEFUSE_FUSION_HPP

// Maximum-likelihood fusion of an RSS-based estimate x1 (lognormal error) and
// a connectivity-based estimate x2 (normal error) on the domain (0, d_th].

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "rangefuse/errors.hpp"

namespace rangefuse {

template <typename Scalar>
struct FusionInput {
  Scalar x1;       ///< RSS-based estimate
  Scalar x2;       ///< connectivity-based estimate
  Scalar sigma_r;  ///< RSS error scale in log10 units; +inf drops the RSS term
  Scalar sigma_c;  ///< connectivity error scale; +inf drops the connectivity term
  Scalar d_th;     ///< upper end of the search domain

  void validate() const {
    if (!(x1 > 0)) throw DomainError("FusionInput: x1 must be positive");
    if (!(d_th > 0) || !std::isfinite(d_th)) throw DomainError("FusionInput: d_th must be positive");
    if (!(x2 >= 0) || x2 > d_th) throw DomainError("FusionInput: x2 must lie in [0, d_th]");
    if (!(sigma_r > 0) || !(sigma_c > 0)) throw DomainError("FusionInput: sigma_r and sigma_c must be positive");
  }
};

template <typename Scalar>
struct SolverSettings {
  std::optional<Scalar> xi;  ///< Newton step tolerance; unset means 1e-8 * d_th
  int max_iter = 50;
  int fallback_grid = 1000;

  void validate() const {
    if (xi && !(*xi > 0)) throw ConfigError("solver: xi must be positive");
    if (max_iter < 1) throw ConfigError("solver: max_iter must be >= 1");
    if (fallback_grid < 100) throw ConfigError("solver: fallback_grid must be >= 100");
  }
};

enum class SolverStatus { newton_converged, fallback_grid, boundary_clamped };

inline std::string_view to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::newton_converged:
      return "newton_converged";
    case SolverStatus::fallback_grid:
      return "fallback_grid";
    case SolverStatus::boundary_clamped:
      return "boundary_clamped";
  }
  return "unknown";
}

template <typename Scalar>
struct FusionResult {
  Scalar distance;
  SolverStatus status;
  int newton_iterations;
};

namespace detail {

// Inverse-variance weights: the score is w_r log10(x1/d) + w_c d (x2 - d).
template <typename Scalar>
struct FusionWeights {
  Scalar w_r;
  Scalar w_c;
  explicit FusionWeights(const FusionInput<Scalar>& in)
      : w_r(Scalar(1) / (in.sigma_r * in.sigma_r * std::numbers::ln10_v<Scalar>)),
        w_c(Scalar(1) / (in.sigma_c * in.sigma_c)) {}
};

// ln L without its d-independent normalizer.
template <typename Scalar>
Scalar likelihood_kernel(const FusionInput<Scalar>& in, Scalar d) {
  Scalar value = 0;
  if (std::isfinite(in.sigma_r)) {
    const Scalar l = std::log10(in.x1 / d);
    value -= l * l / (Scalar(2) * in.sigma_r * in.sigma_r);
  }
  if (std::isfinite(in.sigma_c)) {
    const Scalar e = in.x2 - d;
    value -= e * e / (Scalar(2) * in.sigma_c * in.sigma_c);
  }
  return value;
}

template <typename Scalar>
Scalar score_unchecked(const FusionInput<Scalar>& in, const FusionWeights<Scalar>& w, Scalar d) {
  Scalar value = w.w_c * d * (in.x2 - d);
  if (w.w_r != 0) value += w.w_r * std::log10(in.x1 / d);
  return value;
}

template <typename Scalar>
Scalar score_slope_unchecked(const FusionInput<Scalar>& in, const FusionWeights<Scalar>& w, Scalar d) {
  return -w.w_r / (d * std::numbers::ln10_v<Scalar>) + w.w_c * (in.x2 - Scalar(2) * d);
}

// True when the score has at most one sign change on (0, inf), so any root is
// the unique maximizer of ln L. The score's derivative vanishes where
// 2 w_c d^2 - w_c x2 d + w_r / ln10 = 0.
template <typename Scalar>
bool score_has_single_root(const FusionInput<Scalar>& in, const FusionWeights<Scalar>& w) {
  if (w.w_c == 0 || w.w_r == 0) return true;
  const Scalar a = Scalar(2) * w.w_c;
  const Scalar b = -w.w_c * in.x2;
  const Scalar c = w.w_r / std::numbers::ln10_v<Scalar>;
  const Scalar disc = b * b - Scalar(4) * a * c;
  if (disc <= 0) return true;
  const Scalar root = std::sqrt(disc);
  const Scalar d_lo = (-b - root) / (Scalar(2) * a);
  const Scalar d_hi = (-b + root) / (Scalar(2) * a);
  if (!(d_lo > 0)) return true;
  // Local minimum of the score at d_lo, local maximum at d_hi.
  return score_unchecked(in, w, d_lo) >= 0 || score_unchecked(in, w, d_hi) <= 0;
}

template <typename Scalar, typename F>
Scalar golden_section_max(F&& f, Scalar lo, Scalar hi, Scalar tol) {
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar a = lo, b = hi;
  Scalar c = b - inv_phi * (b - a);
  Scalar d = a + inv_phi * (b - a);
  Scalar fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && b - a > tol; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const Scalar mid = Scalar(0.5) * (a + b);
  Scalar best = mid;
  Scalar best_value = f(mid);
  for (Scalar x : {lo, hi}) {
    const Scalar v = f(x);
    if (v > best_value) {
      best = x;
      best_value = v;
    }
  }
  return best;
}

}  // namespace detail

template <typename Scalar>
Scalar log_likelihood(const FusionInput<Scalar>& in, Scalar d) {
  if (!(d > 0)) throw DomainError("log_likelihood: d must be positive");
  const Scalar norm = Scalar(2) * std::numbers::pi_v<Scalar> * in.sigma_r * in.sigma_c * in.x1 *
                      std::numbers::ln10_v<Scalar>;
  return -std::log(norm) + detail::likelihood_kernel(in, d);
}

/// d times the derivative of ln L; shares its roots and sign on d > 0.
template <typename Scalar>
Scalar score(const FusionInput<Scalar>& in, Scalar d) {
  if (!(d > 0)) throw DomainError("score: d must be positive");
  return detail::score_unchecked(in, detail::FusionWeights<Scalar>(in), d);
}

template <typename Scalar>
Scalar score_derivative(const FusionInput<Scalar>& in, Scalar d) {
  if (!(d > 0)) throw DomainError("score_derivative: d must be positive");
  return detail::score_slope_unchecked(in, detail::FusionWeights<Scalar>(in), d);
}

/// Newton-Raphson on the score from (x1 + x2) / 2. When Newton fails, leaves
/// (eps, d_th], or the likelihood may be bimodal, a grid scan plus
/// golden-section refinement picks the global maximizer instead.
template <typename Scalar>
FusionResult<Scalar> fuse_mle(const FusionInput<Scalar>& in, const SolverSettings<Scalar>& settings = {}) {
  in.validate();
  settings.validate();
  const detail::FusionWeights<Scalar> w(in);
  const Scalar lo = Scalar(1e-9) * in.d_th;
  const Scalar hi = in.d_th;
  const Scalar xi = settings.xi.value_or(Scalar(1e-8) * in.d_th);
  auto kernel = [&](Scalar d) { return detail::likelihood_kernel(in, d); };
  auto score_at = [&](Scalar d) { return detail::score_unchecked(in, w, d); };

  // Newton phase.
  std::optional<Scalar> newton_root;
  Scalar d = (in.x1 + in.x2) / Scalar(2);
  int iter = 0;
  if (d > lo && d <= hi) {
    for (iter = 1; iter <= settings.max_iter; ++iter) {
      const Scalar slope = detail::score_slope_unchecked(in, w, d);
      const Scalar value = score_at(d);
      if (!std::isfinite(slope) || !std::isfinite(value) ||
          std::abs(slope) <= std::numeric_limits<Scalar>::epsilon() * (std::abs(value) + 1))
        break;
      const Scalar next = d - value / slope;
      if (!(next > lo) || next > hi) break;
      const bool done = std::abs(next - d) < xi;
      d = next;
      if (done) {
        newton_root = d;
        break;
      }
    }
  }

  const bool unimodal = detail::score_has_single_root(in, w);
  if (unimodal) {
    // A unique stationary point: ln L increases before it and decreases after.
    if (newton_root && detail::score_slope_unchecked(in, w, *newton_root) < 0)
      return {*newton_root, SolverStatus::newton_converged, iter};
    if (score_at(hi) >= 0) return {hi, SolverStatus::boundary_clamped, iter};
    if (score_at(lo) <= 0) return {lo, SolverStatus::fallback_grid, iter};
  }

  // Fallback: every local maximum of a uniform grid is refined and compared.
  const int n = settings.fallback_grid;
  std::vector<Scalar> grid(n), values(n);
  for (int i = 0; i < n; ++i) {
    grid[i] = lo + (hi - lo) * Scalar(i) / Scalar(n - 1);
    values[i] = kernel(grid[i]);
  }
  grid[n - 1] = hi;
  values[n - 1] = kernel(hi);
  std::vector<Scalar> candidates{hi};
  if (newton_root) candidates.push_back(*newton_root);
  for (int i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || values[i] >= values[i - 1];
    const bool right_ok = i == n - 1 || values[i] >= values[i + 1];
    if (!(left_ok && right_ok)) continue;
    const Scalar a = grid[std::max(i - 1, 0)];
    const Scalar b = grid[std::min(i + 1, n - 1)];
    Scalar x = detail::golden_section_max(kernel, a, b, xi);
    // Polish with bracketed Newton steps so the score vanishes to working precision.
    for (int k = 0; k < 8; ++k) {
      const Scalar slope = detail::score_slope_unchecked(in, w, x);
      if (!(slope < 0)) break;
      const Scalar next = x - score_at(x) / slope;
      if (!(next >= a && next <= b) || kernel(next) < kernel(x)) break;
      const bool done = std::abs(next - x) < xi * Scalar(1e-3);
      x = next;
      if (done) break;
    }
    candidates.push_back(x);
  }
  Scalar best = candidates.front();
  Scalar best_value = kernel(best);
  for (Scalar c : candidates) {
    const Scalar v = kernel(c);
    if (v > best_value) {
      best = c;
      best_value = v;
    }
  }
  return {best, best == hi ? SolverStatus::boundary_clamped : SolverStatus::fallback_grid, iter};
}

}  // namespace rangefuse

#endif  // RANGEFUSE_FUSION_HPP
