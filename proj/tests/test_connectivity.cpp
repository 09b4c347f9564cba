#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "rangefuse/connectivity.hpp"
#include "rangefuse/quadrature.hpp"
#include "support.hpp"

using namespace rangefuse;
using rangefuse::test::sim_channel;
using rangefuse::test::sim_model;

namespace {

// Plain Monte Carlo of the lens integral over a square containing both supports.
double monte_carlo_f(const ChannelParamsd& p, double d, double half_width, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-half_width, half_width);
  double acc = 0;
  for (int i = 0; i < samples; ++i) {
    const double x = u(rng), y = u(rng);
    const double da = std::hypot(x + d / 2, y), db = std::hypot(x - d / 2, y);
    if (da == 0 || db == 0) continue;
    acc += link_probability(p, da) * link_probability(p, db);
  }
  return acc / samples * (4 * half_width * half_width);
}

ChannelParamsd with_range(double r, double alpha, double sigma) {
  return ChannelParamsd(-37.47, alpha, sigma, -37.47 - 10 * alpha * std::log10(r));
}

}  // namespace

TEST(Quadrature, PolynomialsAreExact) {
  const auto res = integrate_gk15([](double x) { return 3 * x * x * x * x - x + 2; }, -1.0, 2.0, 1e-12);
  EXPECT_NEAR(res.value, 3.0 * (32.0 + 1.0) / 5.0 - 1.5 + 6.0, 1e-12);
}

TEST(Quadrature, BreakpointHandlesKink) {
  const auto res = integrate_gk15([](double x) { return std::abs(x - 0.3); }, std::vector<double>{0.0, 0.3, 1.0},
                                  1e-12);
  EXPECT_NEAR(res.value, 0.5 * 0.09 + 0.5 * 0.49, 1e-13);
}

TEST(Quadrature, AdaptsToEndpointSingularity) {
  const auto res = integrate_gk15([](double x) { return 1 / std::sqrt(x); }, 0.0, 1.0, 1e-8);
  EXPECT_NEAR(res.value, 2.0, 1e-7);
}

TEST(Quadrature, ReportsNonConvergence) {
  EXPECT_THROW(integrate_gk15([](double x) { return std::sin(1 / x); }, 1e-8, 1.0, 1e-14, 0.0, 5), NumericError);
}

TEST(UnitDiskF, ClosedFormExamples) {
  EXPECT_NEAR(unit_disk_f(1.0, 0.0), std::numbers::pi, 1e-15);
  EXPECT_NEAR(unit_disk_f(1.0, 2.0), 0.0, 1e-15);
  EXPECT_NEAR(unit_disk_f(1.0, 1.0), 2 * std::numbers::pi / 3 - std::sqrt(3.0) / 2, 1e-14);
}

TEST(UnitDiskF, MonteCarloLensArea) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 1000000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double x = u(rng) * 1.5, y = u(rng);
    hits += std::hypot(x + 0.5, y) <= 1 && std::hypot(x - 0.5, y) <= 1;
  }
  EXPECT_NEAR(hits / double(n) * 6.0 / unit_disk_f(1.0, 1.0), 1.0, 0.005);
}

TEST(UnitDiskF, DerivativeMatchesFiniteDifference) {
  const double r = 3.0, h = 1e-5 * r;
  for (double d = 0.1; d < 2 * r - 0.1; d += 0.37) {
    const double fd = (unit_disk_f(r, d + h) - unit_disk_f(r, d - h)) / (2 * h);
    const double exact = -2 * std::sqrt(r * r - d * d / 4);
    EXPECT_NEAR(fd / exact, 1.0, 1e-6) << d;
    EXPECT_LT(unit_disk_f(r, d + 0.1), unit_disk_f(r, d));
  }
}

TEST(UnitDiskF, DomainErrors) {
  EXPECT_THROW(unit_disk_f(1.0, -0.1), DomainError);
  EXPECT_THROW(unit_disk_f(1.0, 2.1), DomainError);
  EXPECT_THROW(unit_disk_f(0.0, 0.0), DomainError);
}

TEST(GenericS, NoiselessIsDiskArea) {
  EXPECT_NEAR(generic_s(with_range(2.0, 4, 0)), 4 * std::numbers::pi, 1e-12);
}

TEST(GenericS, NearStepChannelApproachesDisk) {
  EXPECT_NEAR(generic_s(with_range(10.0, 4, 0.01)) / (100 * std::numbers::pi), 1.0, 0.005);
}

TEST(GenericS, MatchesLognormalClosedForm) {
  // 2 pi int Q(log(u/r)/s) u du = pi r^2 exp(2 s^2) with s = sigma ln10 / (10 alpha).
  for (auto [alpha, sigma] : {std::pair{4.0, 4.0}, {2.3, 3.92}, {3.0, 8.0}, {6.0, 2.0}}) {
    const auto p = ChannelParamsd(-37.47, alpha, sigma, -90);
    const double s = sigma * std::numbers::ln10 / (10 * alpha);
    const double r = pseudo_range(p);
    EXPECT_NEAR(generic_s(p, 1e-8) / (std::numbers::pi * r * r * std::exp(2 * s * s)), 1.0, 1e-7);
  }
}

TEST(GenericS, ScalesWithRangeSquared) {
  const double s1 = generic_s(with_range(10.0, 4, 4), 1e-9);
  const double s2 = generic_s(with_range(20.0, 4, 4), 1e-9);
  EXPECT_NEAR(s2 / s1, 4.0, 4e-8);
}

TEST(GenericF, NearStepChannelMatchesUnitDisk) {
  const auto p = with_range(10.0, 4, 0.01);
  for (double d : {0.0, 5.0, 10.0, 15.0})
    EXPECT_NEAR(generic_f(p, d) / unit_disk_f(10.0, d), 1.0, 0.005) << d;
}

TEST(GenericF, NoiselessIsUnitDisk) {
  const auto p = with_range(10.0, 4, 0);
  EXPECT_DOUBLE_EQ(generic_f(p, 7.0), unit_disk_f(10.0, 7.0));
  EXPECT_EQ(generic_f(p, 25.0), 0.0);
}

TEST(GenericF, CoincidentNodesMatchRadialIntegralOfSquare) {
  const auto& p = sim_channel();
  const double reach = support_radius(p);
  const double oracle =
      2 * std::numbers::pi *
      test::simpson([&](double u) { return u == 0 ? 0.0 : std::pow(link_probability(p, u), 2) * u; }, 0, reach, 200000);
  const double f0 = generic_f(p, 0.0, 1e-8);
  EXPECT_NEAR(f0 / oracle, 1.0, 1e-6);
  EXPECT_LT(f0, generic_s(p));
}

TEST(GenericF, MatchesMonteCarloAtPseudoRange) {
  const auto& p = sim_channel();
  const double r = pseudo_range(p);
  const double mc = monte_carlo_f(p, r, 3.5 * r, 1000000, 5);
  EXPECT_NEAR(generic_f(p, r) / mc, 1.0, 0.01);
}

TEST(GenericF, FarSeparationIsNegligible) {
  const auto& p = sim_channel();
  const double r = pseudo_range(p);
  const double d = 6.5 * r;  // g(d/2) < 1e-6
  ASSERT_LT(link_probability(p, d / 2), 1e-6);
  const double s = generic_s(p);
  const double quad = generic_f(p, d);
  EXPECT_LT(quad, 1e-3 * s);
  // Sample only the strip between the nodes, where the integrand lives.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-d / 2, d / 2), uy(-2 * r, 2 * r);
  const int n = 10000000;
  double acc = 0, acc2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = ux(rng), y = uy(rng);
    const double v = link_probability(p, std::hypot(x + d / 2, y)) * link_probability(p, std::hypot(x - d / 2, y));
    acc += v;
    acc2 += v * v;
  }
  const double area = d * 4 * r;
  const double mc = acc / n * area;
  const double se = std::sqrt((acc2 / n - std::pow(acc / n, 2)) / n) * area;
  EXPECT_LT(mc, 1e-3 * s);
  EXPECT_NEAR(quad, mc, 5 * se + 1e-3 * quad);
}

TEST(GenericF, NonIncreasingAndBoundedByS) {
  const auto& p = sim_channel();
  const double s = generic_s(p);
  double prev = generic_f(p, 0.0);
  EXPECT_LE(prev, s);
  for (double d = 2.0; d < 160; d += 6.0) {
    const double f = generic_f(p, d);
    EXPECT_LE(f, prev * (1 + 1e-9)) << d;
    prev = f;
  }
  EXPECT_THROW(generic_f(p, -1.0), DomainError);
}

TEST(ThresholdDistance, LinkProbabilityCrossesOneInAThousand) {
  const auto& p = sim_channel();
  const double d_th = threshold_distance(p);
  EXPECT_LE(link_probability(p, d_th), 1e-3);
  EXPECT_GT(link_probability(p, d_th * (1 - 1e-9)), 1e-3);
  EXPECT_EQ(threshold_distance(with_range(10.0, 4, 0)), pseudo_range(with_range(10.0, 4, 0)));
}

TEST(FdModel, InvariantsHold) {
  const auto& m = sim_model();
  ASSERT_EQ(m.num_knots(), 64);
  EXPECT_EQ(m.distances()(0), 0.0);
  EXPECT_EQ(m.distances()(63), m.d_th());
  EXPECT_GT(m.f_th(), 0.0);
  EXPECT_LT(m.f_th(), m.f_zero());
  EXPECT_LE(m.f_zero(), m.s_mass());
  for (Eigen::Index i = 0; i < m.slopes().size(); ++i) EXPECT_LT(m.slopes()(i), 0.0);
  for (Eigen::Index i = 0; i + 1 < m.slopes().size(); ++i) {
    const double x = m.distances()(i + 1);
    const double left = m.slopes()(i) * x + m.intercepts()(i);
    const double right = m.slopes()(i + 1) * x + m.intercepts()(i + 1);
    EXPECT_NEAR(left, right, 1e-9 * std::abs(right));
  }
}

TEST(FdModel, UnitDiskModelStartsAtS) {
  const auto m = build_fd_model(with_range(10.0, 4, 0), 32);
  EXPECT_DOUBLE_EQ(m.f_zero(), m.s_mass());
  EXPECT_DOUBLE_EQ(m.s_mass(), 100 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(m.d_th(), 10.0);
}

TEST(FdModel, ReproducesKnotsExactly) {
  const auto& m = sim_model();
  for (Eigen::Index i = 0; i < m.num_knots(); ++i) EXPECT_EQ(m.evaluate(m.distances()(i)), m.values()(i));
}

TEST(FdModel, MidpointsWithinOnePercentOfQuadrature) {
  const auto& m = sim_model();
  double worst = 0;
  for (Eigen::Index i = 0; i + 1 < m.num_knots(); ++i) {
    const double mid = 0.5 * (m.distances()(i) + m.distances()(i + 1));
    worst = std::max(worst, std::abs(m.evaluate(mid) / generic_f(sim_channel(), mid) - 1));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(FdModel, KnotBelongsToLeftSegment) {
  const auto& m = sim_model();
  EXPECT_EQ(m.segment(m.distances()(5)), 4);
  EXPECT_EQ(m.segment(0.0), 0);
  EXPECT_EQ(m.segment(m.d_th()), m.num_knots() - 2);
  EXPECT_EQ(m.slope(m.distances()(5)), m.slopes()(4));
  EXPECT_THROW(m.evaluate(-1e-9), DomainError);
  EXPECT_THROW(m.evaluate(m.d_th() * 1.001), DomainError);
}

TEST(FdModel, ConstructionRejectsBrokenTables) {
  Eigen::VectorXd d(3), f(3);
  d << 0, 1, 2;
  f << 3, 3.5, 1;
  EXPECT_THROW(FdModeld(4.0, d, f), ModelError);
  f << 3, 2, 0;
  EXPECT_THROW(FdModeld(4.0, d, f), ModelError);
  f << 5, 2, 1;
  EXPECT_THROW(FdModeld(4.0, d, f), ModelError);
  EXPECT_THROW(build_fd_model(sim_channel(), 7), ConfigError);
}

TEST(InvertFd, ClampsAndInterpolates) {
  const auto& m = sim_model();
  EXPECT_EQ(invert_fd(m, m.f_zero()), 0.0);
  EXPECT_EQ(invert_fd(m, m.s_mass()), 0.0);
  EXPECT_EQ(invert_fd(m, m.f_th()), m.d_th());
  EXPECT_EQ(invert_fd(m, 0.0), m.d_th());
  for (Eigen::Index i = 1; i + 1 < m.num_knots(); ++i) EXPECT_EQ(invert_fd(m, m.values()(i)), m.distances()(i));
  for (Eigen::Index i = 0; i + 1 < m.num_knots(); ++i) {
    const double v = 0.5 * (m.values()(i) + m.values()(i + 1));
    const double mid = 0.5 * (m.distances()(i) + m.distances()(i + 1));
    EXPECT_NEAR(invert_fd(m, v), mid, 1e-12 * m.d_th());
  }
}

TEST(EstimateDistanceConn, EmptyCountsGiveZero) {
  EXPECT_EQ(estimate_distance_conn(sim_model(), NeighborCounts{0, 0, 0}), 0.0);
}

TEST(EstimateDistanceConn, OnlyCommonNeighborsClampToZero) {
  const auto& m = sim_model();
  ASSERT_LT(m.f_zero(), m.s_mass());
  EXPECT_EQ(estimate_distance_conn(m, NeighborCounts{10, 0, 0}), 0.0);
  EXPECT_EQ(estimate_distance_conn(m, NeighborCounts{0, 4, 3}), m.d_th());
}

TEST(EstimateDistanceConn, DirectBranchEvaluation) {
  const auto& m = sim_model();
  const NeighborCounts c{7, 9, 5};
  const double rho = 14.0 / 28.0;
  ASSERT_GT(rho * m.s_mass(), m.f_th());
  ASSERT_LT(rho * m.s_mass(), m.f_zero());
  EXPECT_DOUBLE_EQ(estimate_distance_conn(m, c), invert_fd(m, rho * m.s_mass()));
}

TEST(EstimateDistanceConn, InvariantToCommonScaling) {
  const auto& m = sim_model();
  for (const NeighborCounts c : {NeighborCounts{3, 5, 4}, NeighborCounts{12, 2, 9}, NeighborCounts{1, 17, 20}})
    for (int k : {2, 3, 7})
      EXPECT_DOUBLE_EQ(estimate_distance_conn(m, c), estimate_distance_conn(m, NeighborCounts{k * c.m, k * c.p, k * c.q}));
}

TEST(EstimateDistanceConn, RejectsNegativeCounts) {
  EXPECT_THROW(estimate_distance_conn(sim_model(), NeighborCounts{-1, 0, 0}), DomainError);
}

TEST(EstimateDistanceConn, PoissonCountsAreConsistentAtHalfCutoff) {
  const auto& m = sim_model();
  const double d = m.d_th() / 2;
  const double lambda = 30 / m.s_mass();
  const double f = m.evaluate(d);
  std::mt19937_64 rng(8);
  std::poisson_distribution<std::int64_t> pm(lambda * f), pq(lambda * (m.s_mass() - f));
  std::vector<double> est(10000), rho(10000);
  for (std::size_t i = 0; i < est.size(); ++i) {
    const NeighborCounts c{pm(rng), pq(rng), pq(rng)};
    est[i] = estimate_distance_conn(m, c);
    rho[i] = neighbor_ratio<double>(c);
  }
  EXPECT_NEAR(test::mean(est) / d, 1.0, 0.03);
  EXPECT_NEAR(test::mean(rho) / (f / m.s_mass()), 1.0, 0.02);
}

TEST(EstimateLambda, MomentEstimator) {
  const auto& m = sim_model();
  EXPECT_DOUBLE_EQ(estimate_lambda(m, NeighborCounts{3, 4, 5}), 15.0 / (2 * m.s_mass()));
}

TEST(ConnErrorSigma, ScalesAsInverseRootLambda) {
  const auto& m = sim_model();
  const double d = 0.4 * m.d_th();
  const double a = conn_error_sigma(m, 0.004, d);
  EXPECT_NEAR(conn_error_sigma(m, 0.008, d), a / std::sqrt(2.0), 1e-15 * a);
  EXPECT_LT(conn_error_sigma(m, 1e12, d), 1e-4);
  EXPECT_GT(a, 0.0);
}

TEST(ConnErrorSigma, MatchesFormulaOnSegment) {
  const auto& m = sim_model();
  const double d = 0.37 * m.d_th(), lambda = 0.003;
  const double f = m.evaluate(d), k = m.slope(d);
  EXPECT_DOUBLE_EQ(conn_error_sigma(m, lambda, d),
                   f / std::abs(k) * std::sqrt(1 / (2 * lambda * f) + 1 / (2 * lambda * m.s_mass())));
}

TEST(ConnErrorSigma, DomainErrors) {
  const auto& m = sim_model();
  EXPECT_THROW(conn_error_sigma(m, 0.004, 0.0), DomainError);
  EXPECT_THROW(conn_error_sigma(m, 0.004, m.d_th() * 1.01), DomainError);
  EXPECT_THROW(conn_error_sigma(m, 0.0, 10.0), DomainError);
  EXPECT_NO_THROW(conn_error_sigma(m, 0.004, m.d_th()));
}

TEST(ConnEstimatePdf, NormalShape) {
  const auto& m = sim_model();
  const double lambda = 20 / m.s_mass(), d = 0.5 * m.d_th();
  const double s = conn_error_sigma(m, lambda, d);
  EXPECT_NEAR(conn_estimate_pdf(m, lambda, d, d), 1 / (std::sqrt(2 * std::numbers::pi) * s), 1e-15);
  for (double delta : {0.3, 1.7, 6.0})
    EXPECT_NEAR(conn_estimate_pdf(m, lambda, d, d + delta), conn_estimate_pdf(m, lambda, d, d - delta), 1e-15);
  const double mass =
      test::simpson([&](double x) { return conn_estimate_pdf(m, lambda, d, x); }, d - 8 * s, d + 8 * s, 2000);
  EXPECT_NEAR(mass, 1.0, 1e-6);
}

TEST(FdModelScalar, FloatModelFromDoubleTable) {
  const auto& m = sim_model();
  const FdModel<float> mf(static_cast<float>(m.s_mass()), m.distances().cast<float>(), m.values().cast<float>());
  const float d = static_cast<float>(0.3 * m.d_th());
  EXPECT_NEAR(mf.evaluate(d) / m.evaluate(static_cast<double>(d)), 1.0, 1e-5);
}
