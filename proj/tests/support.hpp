#ifndef RANGEFUSE_TESTS_SUPPORT_HPP
#define RANGEFUSE_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "rangefuse/channel.hpp"
#include "rangefuse/connectivity.hpp"

namespace rangefuse::test {

// Simulation channel: p_ref -37.47 dBm, d0 1 m, alpha 4, sigma 4 dB, threshold -100 dBm.
inline const ChannelParamsd& sim_channel() {
  static const ChannelParamsd params;
  return params;
}

inline const FdModeld& sim_model() {
  static const FdModeld model = build_fd_model(sim_channel(), 64, 1e-6);
  return model;
}

// Indoor channel of the measured network.
inline ChannelParamsd field_channel() { return ChannelParamsd(-37.47, 2.3, 3.92, -55.0); }

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

// Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double worst = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double c = cdf(sample[i]);
    worst = std::max({worst, std::abs(c - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - c)});
  }
  return worst;
}

// Composite Simpson on [a, b] with n (even) panels; an oracle independent of the library's quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double ranks_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace rangefuse::test

#endif  // RANGEFUSE_TESTS_SUPPORT_HPP
