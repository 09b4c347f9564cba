#ifndef RANGEFUSE_SIMULATOR_HPP
#define RANGEFUSE_SIMULATOR_HPP

// Poisson deployments, shadowed links, neighbor counting and the Monte Carlo
// RMSE harness comparing RSS, connectivity and fused ranging with the CRLB.

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rangefuse/channel.hpp"
#include "rangefuse/connectivity.hpp"
#include "rangefuse/dataset.hpp"
#include "rangefuse/fusion.hpp"

namespace rangefuse {

using Rng = std::mt19937_64;

/// Counter-based seed derivation: trial streams depend only on (master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Axis-aligned square [0, side]^2 populated by a homogeneous Poisson process.
struct Deployment {
  double side = 0;
  double lambda = 0;
  Eigen::Matrix2Xd nodes;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return nodes.cols(); }
};

/// Counts have the same law under both models (each node-endpoint pair is
/// queried once); they differ in the readings a generated fixture records.
enum class LinkModel {
  symmetric,    ///< one shadowing draw per unordered pair
  directional,  ///< one draw per ordered pair; a fixture stores the mean of both directions
};

double mu_to_lambda(double mu, double s_mass);

Deployment deploy_poisson(double side, double lambda, Rng& rng, std::uint64_t seed = 0);

/// Counts the deployed nodes linked to a only, b only, or both. a and b must
/// sit at least d_th from every edge of the region.
NeighborCounts realize_neighbors(const Deployment& dep, const ChannelParamsd& params, const Eigen::Vector2d& a,
                                 const Eigen::Vector2d& b, double d_th, Rng& rng,
                                 LinkModel links = LinkModel::symmetric);

/// Probe distances spread evenly over [lo, hi] * d_th.
std::vector<double> probe_fractions(int count, double lo = 0.1, double hi = 1.0);

struct ExperimentConfig {
  ChannelParamsd channel;
  double mu = 20;
  std::vector<double> distances;  ///< probe distances in meters; when empty, fractions * d_th
  std::vector<double> fractions = probe_fractions(10);
  int trials = 10000;
  std::uint64_t seed = 1;
  double margin = 1.5;
  int n_knots = 64;
  double quad_tol = 1e-6;
  SolverSettings<double> solver;
  LinkModel links = LinkModel::symmetric;
  unsigned threads = 0;  ///< 0 = hardware concurrency

  void validate() const;
};

struct RmseRow {
  double d_true = 0;
  double rmse_rss = 0;
  double rmse_conn = 0;
  double rmse_fused = 0;
  double sqrt_crlb = 0;
  int trials = 0;
  double mean_neighbors = 0;  ///< empirical E(M + P), for diagnostics

  bool operator==(const RmseRow&) const = default;
};

struct RmseReport {
  std::vector<RmseRow> rows;
  double s_mass = 0;
  double d_th = 0;
  double lambda = 0;
  double side = 0;

  bool operator==(const RmseReport&) const = default;
};

/// Per-trial estimates of one probe distance, exposed for statistical tests.
struct TrialEstimates {
  std::vector<double> rss;
  std::vector<double> conn;
  std::vector<double> fused;
  std::vector<NeighborCounts> counts;
};

/// Probe distances in meters for a model's d_th.
std::vector<double> resolve_distances(const ExperimentConfig& cfg, double d_th);

RmseReport run_experiment(const ExperimentConfig& cfg);
RmseReport run_experiment(const ExperimentConfig& cfg, const FdModeld& model);

/// All trials at a single probe distance (probe index selects the seed stream).
TrialEstimates simulate_probe(const ExperimentConfig& cfg, const FdModeld& model, double d, std::uint64_t probe);

void write_report_csv(const RmseReport& report, std::ostream& out);
std::string report_to_json(const RmseReport& report, const ExperimentConfig& cfg);

/// A realized network in dataset form: links are RSS readings at or above the
/// threshold, one shadowing draw per unordered pair.
struct MeasurementFixture {
  MeasurementSet set;
  Eigen::MatrixXi adjacency;  ///< simulator-side link matrix, indexed like set.nodes
};

MeasurementFixture generate_fixture(const ChannelParamsd& params, double lambda, double side, Rng& rng,
                                    LinkModel links = LinkModel::symmetric);

/// Counts taken directly from the fixture's adjacency matrix.
NeighborCounts fixture_counts(const MeasurementFixture& fixture, Eigen::Index a, Eigen::Index b);

}  // namespace rangefuse

#endif  // RANGEFUSE_SIMULATOR_HPP
