#ifndef RANGEFUSE_QUADRATURE_HPP
#define RANGEFUSE_QUADRATURE_HPP

// Globally adaptive 15-point Gauss-Kronrod quadrature (QAG-style bisection of
// the interval with the largest error estimate).

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "rangefuse/errors.hpp"

namespace rangefuse {

template <typename Scalar>
struct QuadratureResult {
  Scalar value = 0;
  Scalar abs_error = 0;
  int evaluations = 0;
  int intervals = 0;
};

namespace detail {

template <typename Scalar>
struct Gk15Rule {
  // Kronrod abscissae on [0, 1); odd indices are the 7-point Gauss nodes.
  static constexpr std::array<Scalar, 8> xgk = {
      Scalar(0.991455371120812639206854697526329), Scalar(0.949107912342758524526189684047851),
      Scalar(0.864864423359769072789712788640926), Scalar(0.741531185599394439863864773280788),
      Scalar(0.586087235467691130294144845693013), Scalar(0.405845151377397166906606412076961),
      Scalar(0.207784955007898467600689403773245), Scalar(0)};
  static constexpr std::array<Scalar, 8> wgk = {
      Scalar(0.022935322010529224963732008058970), Scalar(0.063092092629978553290700663189204),
      Scalar(0.104790010322250183839876322541518), Scalar(0.140653259715525918745189590510238),
      Scalar(0.169004726639267902826583426598550), Scalar(0.190350578064785409913256402421014),
      Scalar(0.204432940075298892414161999234649), Scalar(0.209482141084727828012999174891714)};
  static constexpr std::array<Scalar, 4> wg = {
      Scalar(0.129484966168869693270611432679082), Scalar(0.279705391489276667901467771423780),
      Scalar(0.381830050505118944950369775488975), Scalar(0.417959183673469387755102040816327)};
};

template <typename Scalar>
struct Panel {
  Scalar a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <typename Scalar, typename F>
Panel<Scalar> gk15_panel(F& f, Scalar a, Scalar b) {
  using Rule = Gk15Rule<Scalar>;
  const Scalar center = Scalar(0.5) * (a + b);
  const Scalar half = Scalar(0.5) * (b - a);
  const Scalar fc = f(center);
  Scalar kronrod = fc * Rule::wgk[7];
  Scalar gauss = fc * Rule::wg[3];
  for (int j = 0; j < 7; ++j) {
    const Scalar dx = half * Rule::xgk[j];
    const Scalar sum = f(center - dx) + f(center + dx);
    kronrod += Rule::wgk[j] * sum;
    if (j % 2 == 1) gauss += Rule::wg[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Integrates f over the union of [breaks[i], breaks[i+1]]. Converges when the
/// summed error estimate drops below max(abs_tol, rel_tol * |I|); throws
/// NumericError with diagnostics after max_intervals panels.
template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_gk15(F&& f, const std::vector<Scalar>& breaks, Scalar rel_tol,
                                        Scalar abs_tol = Scalar(0), int max_intervals = 4000) {
  std::priority_queue<detail::Panel<Scalar>> heap;
  QuadratureResult<Scalar> result;
  Scalar settled_value = 0;
  Scalar settled_error = 0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    auto panel = detail::gk15_panel(f, breaks[i], breaks[i + 1]);
    result.value += panel.value;
    result.abs_error += panel.error;
    result.evaluations += 15;
    heap.push(panel);
  }
  result.intervals = static_cast<int>(heap.size());
  auto converged = [&] {
    return result.abs_error <= std::max(abs_tol, rel_tol * std::abs(result.value));
  };
  while (!heap.empty() && !converged()) {
    if (result.intervals >= max_intervals) {
      std::ostringstream msg;
      msg << "quadrature did not converge: value=" << result.value << " error=" << result.abs_error
          << " rel_tol=" << rel_tol << " intervals=" << result.intervals << " worst=[" << heap.top().a << ", "
          << heap.top().b << "]";
      throw NumericError(msg.str());
    }
    const auto worst = heap.top();
    const Scalar mid = Scalar(0.5) * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Panel cannot be split any further in floating point; accept it as is.
      heap.pop();
      settled_value += worst.value;
      settled_error += worst.error;
      result.abs_error -= worst.error;
      continue;
    }
    heap.pop();
    const auto left = detail::gk15_panel(f, worst.a, mid);
    const auto right = detail::gk15_panel(f, mid, worst.b);
    result.value += left.value + right.value - worst.value;
    result.abs_error += left.error + right.error - worst.error;
    result.evaluations += 30;
    ++result.intervals;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the incremental updates.
  Scalar value = settled_value, error = settled_error;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  result.value = value;
  result.abs_error = error;
  return result;
}

template <typename Scalar, typename F>
QuadratureResult<Scalar> integrate_gk15(F&& f, Scalar a, Scalar b, Scalar rel_tol, Scalar abs_tol = Scalar(0),
                                        int max_intervals = 4000) {
  return integrate_gk15(std::forward<F>(f), std::vector<Scalar>{a, b}, rel_tol, abs_tol, max_intervals);
}

}  // namespace rangefuse

#endif  // RANGEFUSE_QUADRATURE_HPP
