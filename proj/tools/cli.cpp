#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rangefuse/config.hpp"
#include "rangefuse/connectivity.hpp"
#include "rangefuse/crlb.hpp"
#include "rangefuse/dataset.hpp"
#include "rangefuse/errors.hpp"
#include "rangefuse/estimate.hpp"
#include "rangefuse/fd_model_io.hpp"
#include "rangefuse/format.hpp"
#include "rangefuse/simulator.hpp"

namespace rangefuse::cli {

namespace {

struct SharedOptions {
  std::string config;
  std::optional<double> p_ref, threshold, d0, alpha, sigma_db;
  std::optional<int> n_knots;
  std::optional<double> quad_tol;
  std::string cache_dir;
};

void add_shared(CLI::App* cmd, SharedOptions& o) {
  cmd->add_option("--config", o.config, "INI file with [channel], [experiment] and [solver] sections")
      ->check(CLI::ExistingFile);
  cmd->add_option("--p-ref", o.p_ref, "mean RSS at d0 (dBm)");
  cmd->add_option("--threshold", o.threshold, "link threshold (dBm)");
  cmd->add_option("--d0", o.d0, "reference distance (m)");
  cmd->add_option("--alpha", o.alpha, "path loss exponent");
  cmd->add_option("--sigma-db", o.sigma_db, "shadowing deviation (dB)");
  cmd->add_option("--n-knots", o.n_knots, "f(d) table size");
  cmd->add_option("--quad-tol", o.quad_tol, "relative quadrature tolerance");
  cmd->add_option("--cache-dir", o.cache_dir, "reuse f(d) tables stored in this directory");
}

ExperimentConfig resolve(const SharedOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  auto& ch = cfg.channel;
  if (o.p_ref) ch.p_ref_dbm = *o.p_ref;
  if (o.threshold) ch.rss_threshold_dbm = *o.threshold;
  if (o.d0) ch.d0 = *o.d0;
  if (o.alpha) ch.alpha = *o.alpha;
  if (o.sigma_db) ch.sigma_db = *o.sigma_db;
  if (o.n_knots) cfg.n_knots = *o.n_knots;
  if (o.quad_tol) cfg.quad_tol = *o.quad_tol;
  return cfg;
}

FdModeld obtain_model(const ExperimentConfig& cfg, const SharedOptions& o) {
  if (!o.cache_dir.empty()) return cached_fd_model(cfg.channel, cfg.n_knots, cfg.quad_tol, o.cache_dir);
  return build_fd_model(cfg.channel, cfg.n_knots, cfg.quad_tol);
}

// Writes to the named file, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open output file " + path);
  body(file);
  if (!file) throw ConfigError("failed writing " + path);
}

std::vector<double> list_or_empty(const std::string& text) {
  return text.empty() ? std::vector<double>{} : parse_real_list(text);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distance estimation from RSS and connectivity, with Cramer-Rao bounds", "rangefuse"};
  app.require_subcommand(1);

  // fd-table
  SharedOptions fd_opts;
  std::string fd_output;
  auto* fd = app.add_subcommand("fd-table", "tabulate f(d) for a channel and write the model file");
  add_shared(fd, fd_opts);
  fd->add_option("--output,-o", fd_output, "model file")->required();

  // simulate
  SharedOptions sim_opts;
  std::string sim_output, sim_json, sim_distances, sim_fractions;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_trials, sim_max_iter, sim_grid;
  std::optional<double> sim_mu, sim_xi;
  std::optional<unsigned> sim_threads;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo RMSE of the three estimators against the CRLB");
  add_shared(sim, sim_opts);
  sim->add_option("--output,-o", sim_output, "CSV report (default stdout)");
  sim->add_option("--json", sim_json, "also write a JSON report here");
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--trials", sim_trials, "trials per probe distance");
  sim->add_option("--mu", sim_mu, "mean neighbors per node");
  sim->add_option("--distances", sim_distances, "probe distances in meters, comma separated");
  sim->add_option("--fractions", sim_fractions, "probe distances as fractions of d_th");
  sim->add_option("--threads", sim_threads, "worker threads (0 = all cores)");
  sim->add_option("--xi", sim_xi, "Newton step tolerance");
  sim->add_option("--max-iter", sim_max_iter, "Newton iteration cap");
  sim->add_option("--fallback-grid", sim_grid, "grid size of the fallback search");

  // crlb
  SharedOptions crlb_opts;
  std::string crlb_output, crlb_distances, crlb_fractions;
  std::optional<double> crlb_mu;
  auto* crlb = app.add_subcommand("crlb", "Cramer-Rao bound on distance over a set of probes");
  add_shared(crlb, crlb_opts);
  crlb->add_option("--output,-o", crlb_output, "CSV (default stdout)");
  crlb->add_option("--mu", crlb_mu, "mean neighbors per node");
  crlb->add_option("--distances", crlb_distances, "distances in meters, comma separated");
  crlb->add_option("--fractions", crlb_fractions, "distances as fractions of d_th");

  // estimate
  SharedOptions est_opts;
  double est_rss = 0;
  std::int64_t est_m = 0, est_p = 0, est_q = 0;
  std::optional<double> est_lambda;
  auto* est = app.add_subcommand("estimate", "estimate one pair distance from an RSS reading and neighbor counts");
  add_shared(est, est_opts);
  est->add_option("--rss", est_rss, "RSS reading (dBm)")->required();
  est->add_option("--m", est_m, "common neighbors")->required()->check(CLI::NonNegativeNumber);
  est->add_option("--p", est_p, "neighbors of the first node only")->required()->check(CLI::NonNegativeNumber);
  est->add_option("--q", est_q, "neighbors of the second node only")->required()->check(CLI::NonNegativeNumber);
  est->add_option("--lambda", est_lambda, "node intensity per m^2 (default: estimated from the counts)");

  // dataset
  SharedOptions ds_opts;
  std::string ds_input, ds_pairs, ds_output;
  auto* ds = app.add_subcommand("dataset", "per-pair errors of the three estimators on a measured network");
  add_shared(ds, ds_opts);
  ds->add_option("--input,-i", ds_input, "measurement file ('# nodes' and '# rss' sections)")
      ->required()
      ->check(CLI::ExistingFile);
  ds->add_option("--pairs", ds_pairs, "pairs to evaluate, e.g. 24:25,3:7")->required();
  ds->add_option("--output,-o", ds_output, "CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fd->parsed()) {
      ExperimentConfig cfg = resolve(fd_opts);
      cfg.validate();
      const FdModeld model = obtain_model(cfg, fd_opts);
      emit(fd_output, out, [&](std::ostream& o) { write_fd_model(o, cfg.channel, cfg.quad_tol, model); });
      out << "S=" << format_double(model.s_mass()) << '\n'
          << "d_th=" << format_double(model.d_th()) << '\n'
          << "knots=" << model.num_knots() << '\n';
    } else if (sim->parsed()) {
      ExperimentConfig cfg = resolve(sim_opts);
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_trials) cfg.trials = *sim_trials;
      if (sim_mu) cfg.mu = *sim_mu;
      if (sim_threads) cfg.threads = *sim_threads;
      if (sim_xi) cfg.solver.xi = *sim_xi;
      if (sim_max_iter) cfg.solver.max_iter = *sim_max_iter;
      if (sim_grid) cfg.solver.fallback_grid = *sim_grid;
      if (!sim_distances.empty()) cfg.distances = parse_real_list(sim_distances);
      if (!sim_fractions.empty()) cfg.fractions = parse_real_list(sim_fractions);
      cfg.validate();
      const FdModeld model = obtain_model(cfg, sim_opts);
      const RmseReport report = run_experiment(cfg, model);
      emit(sim_output, out, [&](std::ostream& o) { write_report_csv(report, o); });
      if (!sim_json.empty()) emit(sim_json, out, [&](std::ostream& o) { o << report_to_json(report, cfg) << '\n'; });
    } else if (crlb->parsed()) {
      ExperimentConfig cfg = resolve(crlb_opts);
      if (crlb_mu) cfg.mu = *crlb_mu;
      cfg.distances = list_or_empty(crlb_distances);
      if (!crlb_fractions.empty()) cfg.fractions = parse_real_list(crlb_fractions);
      cfg.validate();
      if (!(cfg.channel.sigma_db > 0)) throw ConfigError("crlb: sigma_db must be positive");
      const FdModeld model = obtain_model(cfg, crlb_opts);
      const double lambda = mu_to_lambda(cfg.mu, model.s_mass());
      const auto distances = resolve_distances(cfg, model.d_th());
      std::ostringstream body;
      body << "d,crlb_variance,sqrt_crlb\n";
      for (double d : distances) {
        const double v = crlb_distance(cfg.channel, model, lambda, d);
        body << format_double(d) << ',' << format_double(v) << ',' << format_double(std::sqrt(v)) << '\n';
      }
      emit(crlb_output, out, [&](std::ostream& o) { o << body.str(); });
    } else if (est->parsed()) {
      ExperimentConfig cfg = resolve(est_opts);
      cfg.validate();
      if (!std::isfinite(est_rss)) throw ConfigError("estimate: --rss must be finite");
      if (est_lambda && !(*est_lambda > 0 && std::isfinite(*est_lambda)))
        throw ConfigError("estimate: --lambda must be positive");
      const FdModeld model = obtain_model(cfg, est_opts);
      const NeighborCounts counts{est_m, est_p, est_q};
      const auto rec = estimate_pair(cfg.channel, model, RssObservation<double>{est_rss}, counts, est_lambda,
                                     cfg.solver, RssGate::below_threshold);
      if (!rec.rss_used)
        err << "warning: rss " << format_double(est_rss) << " dBm is below the link threshold "
            << format_double(cfg.channel.rss_threshold_dbm) << " dBm; using connectivity only\n";
      out << "d_rss=" << format_double(rec.rss_estimate) << '\n'
          << "d_conn=" << format_double(rec.conn_estimate) << '\n'
          << "d_fused=" << format_double(rec.fused_estimate) << '\n'
          << "sqrt_crlb=" << format_double(std::sqrt(rec.crlb)) << '\n'
          << "lambda=" << format_double(rec.lambda) << '\n'
          << "status=" << to_string(rec.status) << '\n';
    } else if (ds->parsed()) {
      ExperimentConfig cfg = resolve(ds_opts);
      cfg.validate();
      const auto pairs = parse_pair_list(ds_pairs);
      if (pairs.empty()) throw ConfigError("dataset: --pairs lists no pairs");
      const MeasurementSet set = load_measurements(ds_input, cfg.channel);
      const FdModeld model = obtain_model(cfg, ds_opts);
      const auto rows = evaluate_pairs(set, model, pairs, cfg.solver);
      for (const auto& r : rows)
        if (!r.ok()) err << "warning: pair " << r.a << ':' << r.b << ": " << r.error << '\n';
      emit(ds_output, out, [&](std::ostream& o) { write_pairs_csv(rows, o); });
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace rangefuse::cli
