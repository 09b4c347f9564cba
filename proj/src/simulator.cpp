#include "rangefuse/simulator.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "rangefuse/crlb.hpp"
#include "rangefuse/errors.hpp"
#include "rangefuse/estimate.hpp"
#include "rangefuse/format.hpp"

namespace rangefuse {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Shadowing needed for a link at squared distance dist_sq: the reading clears
// the threshold iff Z >= 10 alpha log10(dist / r).
struct LinkRule {
  double range_sq;
  double half_slope;  // 5 alpha
  bool step;

  explicit LinkRule(const ChannelParamsd& params)
      : range_sq(std::pow(pseudo_range(params), 2)), half_slope(5.0 * params.alpha), step(params.sigma_db == 0) {}

  double required(double dist_sq) const { return half_slope * std::log10(dist_sq / range_sq); }
};

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

double mu_to_lambda(double mu, double s_mass) {
  if (!(mu > 0) || !(s_mass > 0)) throw DomainError("mu_to_lambda: mu and S must be positive");
  return mu / s_mass;
}

Deployment deploy_poisson(double side, double lambda, Rng& rng, std::uint64_t seed) {
  if (!(side > 0) || !(lambda >= 0)) throw DomainError("deploy_poisson: need side > 0 and lambda >= 0");
  Deployment dep;
  dep.side = side;
  dep.lambda = lambda;
  dep.seed = seed;
  const double mean = lambda * side * side;
  std::int64_t count = 0;
  if (mean > 0) count = std::poisson_distribution<std::int64_t>(mean)(rng);
  dep.nodes.resize(2, count);
  std::uniform_real_distribution<double> coord(0.0, side);
  for (std::int64_t i = 0; i < count; ++i) {
    dep.nodes(0, i) = coord(rng);
    dep.nodes(1, i) = coord(rng);
  }
  return dep;
}

NeighborCounts realize_neighbors(const Deployment& dep, const ChannelParamsd& params, const Eigen::Vector2d& a,
                                 const Eigen::Vector2d& b, double d_th, Rng& rng, LinkModel /*links*/) {
  for (const Eigen::Vector2d& p : {a, b}) {
    const double clearance = std::min({p.x(), p.y(), dep.side - p.x(), dep.side - p.y()});
    if (clearance < d_th * (1 - 1e-12))
      throw ConfigError("realize_neighbors: probed node closer than d_th to the region edge");
  }
  const LinkRule rule(params);
  std::normal_distribution<double> shadowing(0.0, params.sigma_db > 0 ? params.sigma_db : 1.0);
  auto linked = [&](double dist_sq) {
    if (rule.step) return dist_sq <= rule.range_sq;
    return shadowing(rng) >= rule.required(dist_sq);
  };
  NeighborCounts counts;
  for (Eigen::Index i = 0; i < dep.nodes.cols(); ++i) {
    const auto node = dep.nodes.col(i);
    const bool to_a = linked((node - a).squaredNorm());
    const bool to_b = linked((node - b).squaredNorm());
    counts.m += to_a && to_b;
    counts.p += to_a && !to_b;
    counts.q += to_b && !to_a;
  }
  return counts;
}

std::vector<double> probe_fractions(int count, double lo, double hi) {
  std::vector<double> out(std::max(count, 0));
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? hi : lo + (hi - lo) * i / (count - 1);
  return out;
}

void ExperimentConfig::validate() const {
  channel.validate();
  if (!(mu > 0)) throw ConfigError("experiment: mu must be positive");
  if (trials < 1) throw ConfigError("experiment: trials must be >= 1");
  if (!(margin >= 1)) throw ConfigError("experiment: margin must be >= 1 (in units of d_th)");
  if (n_knots < 8) throw ConfigError("experiment: n_knots must be >= 8");
  if (!(quad_tol > 0)) throw ConfigError("experiment: quad_tol must be positive");
  if (distances.empty() && fractions.empty()) throw ConfigError("experiment: no probe distances");
  for (double f : fractions)
    if (!(f > 0) || f > 1) throw ConfigError("experiment: probe fractions must lie in (0, 1]");
  solver.validate();
}

std::vector<double> resolve_distances(const ExperimentConfig& cfg, double d_th) {
  std::vector<double> out;
  if (!cfg.distances.empty()) {
    for (double d : cfg.distances) {
      if (!(d > 0) || d > d_th * (1 + 1e-12))
        throw ConfigError("experiment: probe distance " + format_double(d) + " outside (0, d_th = " +
                          format_double(d_th) + "]");
      out.push_back(std::min(d, d_th));
    }
    return out;
  }
  for (double f : cfg.fractions) out.push_back(f == 1.0 ? d_th : f * d_th);
  return out;
}

TrialEstimates simulate_probe(const ExperimentConfig& cfg, const FdModeld& model, double d, std::uint64_t probe) {
  const double d_th = model.d_th();
  const double lambda = mu_to_lambda(cfg.mu, model.s_mass());
  const double side = (2 * cfg.margin + 1) * d_th;
  const Eigen::Vector2d a(side / 2 - d / 2, side / 2);
  const Eigen::Vector2d b(side / 2 + d / 2, side / 2);

  TrialEstimates out;
  const auto n = static_cast<std::size_t>(cfg.trials);
  out.rss.resize(n);
  out.conn.resize(n);
  out.fused.resize(n);
  out.counts.resize(n);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const std::uint64_t seed = derive_seed(cfg.seed, probe, t);
      Rng rng(seed);
      const Deployment dep = deploy_poisson(side, lambda, rng, seed);
      const auto rss = sample_rss(cfg.channel, d, rng);
      const auto counts = realize_neighbors(dep, cfg.channel, a, b, d_th, rng, cfg.links);
      const auto rec = estimate_pair(cfg.channel, model, rss, counts, std::optional<double>(lambda), cfg.solver,
                                     RssGate::none);
      out.rss[t] = rec.rss_estimate;
      out.conn[t] = rec.conn_estimate;
      out.fused[t] = rec.fused_estimate;
      out.counts[t] = counts;
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    run_range(0, n);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(run_range, n * w / threads, n * (w + 1) / threads);
  }
  return out;
}

RmseReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, build_fd_model(cfg.channel, cfg.n_knots, cfg.quad_tol));
}

RmseReport run_experiment(const ExperimentConfig& cfg, const FdModeld& model) {
  cfg.validate();
  RmseReport report;
  report.s_mass = model.s_mass();
  report.d_th = model.d_th();
  report.lambda = mu_to_lambda(cfg.mu, model.s_mass());
  report.side = (2 * cfg.margin + 1) * model.d_th();
  const auto distances = resolve_distances(cfg, model.d_th());
  for (std::size_t p = 0; p < distances.size(); ++p) {
    const double d = distances[p];
    const auto est = simulate_probe(cfg, model, d, p);
    auto rmse = [d](const std::vector<double>& v) {
      double sum = 0;
      for (double x : v) sum += (x - d) * (x - d);
      return std::sqrt(sum / static_cast<double>(v.size()));
    };
    RmseRow row;
    row.d_true = d;
    row.rmse_rss = rmse(est.rss);
    row.rmse_conn = rmse(est.conn);
    row.rmse_fused = rmse(est.fused);
    row.sqrt_crlb = cfg.channel.sigma_db > 0 ? std::sqrt(crlb_distance(cfg.channel, model, report.lambda, d)) : 0.0;
    row.trials = cfg.trials;
    double neighbors = 0;
    for (const auto& c : est.counts) neighbors += static_cast<double>(c.m + c.p);
    row.mean_neighbors = neighbors / static_cast<double>(est.counts.size());
    report.rows.push_back(row);
  }
  return report;
}

void write_report_csv(const RmseReport& report, std::ostream& out) {
  out << "d_true,rmse_rss,rmse_conn,rmse_fused,sqrt_crlb,trials\n";
  for (const auto& r : report.rows) {
    out << format_double(r.d_true) << ',' << format_double(r.rmse_rss) << ',' << format_double(r.rmse_conn) << ','
        << format_double(r.rmse_fused) << ',' << format_double(r.sqrt_crlb) << ',' << r.trials << '\n';
  }
}

std::string report_to_json(const RmseReport& report, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["channel"] = {{"p_ref_dbm", cfg.channel.p_ref_dbm},
                  {"d0_m", cfg.channel.d0},
                  {"alpha", cfg.channel.alpha},
                  {"sigma_db", cfg.channel.sigma_db},
                  {"rss_threshold_dbm", cfg.channel.rss_threshold_dbm}};
  j["mu"] = cfg.mu;
  j["seed"] = cfg.seed;
  j["s_mass"] = report.s_mass;
  j["d_th"] = report.d_th;
  j["lambda"] = report.lambda;
  j["side"] = report.side;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"d_true", r.d_true},
                    {"rmse_rss", r.rmse_rss},
                    {"rmse_conn", r.rmse_conn},
                    {"rmse_fused", r.rmse_fused},
                    {"sqrt_crlb", r.sqrt_crlb},
                    {"trials", r.trials},
                    {"mean_neighbors", r.mean_neighbors}});
  }
  return j.dump(2);
}

MeasurementFixture generate_fixture(const ChannelParamsd& params, double lambda, double side, Rng& rng,
                                    LinkModel links) {
  const Deployment dep = deploy_poisson(side, lambda, rng);
  const Eigen::Index n = dep.size();
  MeasurementFixture fx;
  fx.set.channel = params;
  fx.adjacency = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) fx.set.nodes.push_back({i, dep.nodes(0, i), dep.nodes(1, i)});
  std::normal_distribution<double> shadowing(0.0, params.sigma_db > 0 ? params.sigma_db : 1.0);
  auto draw = [&] { return params.sigma_db > 0 ? shadowing(rng) : 0.0; };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dist = (dep.nodes.col(i) - dep.nodes.col(j)).norm();
      if (!(dist > 0)) continue;
      const double mean = mean_rss(params, dist);
      double reading = mean + draw();
      if (links == LinkModel::directional) reading = (reading + mean + draw()) / 2;
      if (reading >= params.rss_threshold_dbm) {
        fx.adjacency(i, j) = fx.adjacency(j, i) = 1;
        fx.set.rss[{i, j}] = reading;
      }
    }
  }
  return fx;
}

NeighborCounts fixture_counts(const MeasurementFixture& fixture, Eigen::Index a, Eigen::Index b) {
  NeighborCounts counts;
  const auto& adj = fixture.adjacency;
  for (Eigen::Index n = 0; n < adj.rows(); ++n) {
    if (n == a || n == b) continue;
    const bool to_a = adj(n, a) != 0;
    const bool to_b = adj(n, b) != 0;
    counts.m += to_a && to_b;
    counts.p += to_a && !to_b;
    counts.q += to_b && !to_a;
  }
  return counts;
}

}  // namespace rangefuse
