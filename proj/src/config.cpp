#include "rangefuse/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <ostream>
#include <sstream>

#include "rangefuse/errors.hpp"
#include "rangefuse/format.hpp"

namespace rangefuse {

namespace {

namespace pt = boost::property_tree;

template <typename T>
void read_key(const pt::ptree& tree, const std::string& path, T& out) {
  const auto value = tree.get_optional<std::string>(path);
  if (!value) return;
  if (!parse_number(*value, out)) throw ConfigError("config: cannot parse " + path + " = '" + *value + "'");
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    double v = 0;
    if (!parse_number(item, v)) throw ConfigError("cannot parse number '" + item + "' in list");
    out.push_back(v);
  }
  return out;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), static_cast<int>(e.line()));
  }
  ExperimentConfig cfg;
  auto& ch = cfg.channel;
  read_key(tree, "channel.p_ref_dbm", ch.p_ref_dbm);
  read_key(tree, "channel.d0_m", ch.d0);
  read_key(tree, "channel.alpha", ch.alpha);
  read_key(tree, "channel.sigma_db", ch.sigma_db);
  read_key(tree, "channel.rss_threshold_dbm", ch.rss_threshold_dbm);

  read_key(tree, "experiment.mu", cfg.mu);
  read_key(tree, "experiment.trials", cfg.trials);
  read_key(tree, "experiment.seed", cfg.seed);
  read_key(tree, "experiment.margin", cfg.margin);
  read_key(tree, "experiment.n_knots", cfg.n_knots);
  read_key(tree, "experiment.quad_tol", cfg.quad_tol);
  read_key(tree, "experiment.threads", cfg.threads);
  if (auto v = tree.get_optional<std::string>("experiment.distances")) cfg.distances = parse_real_list(*v);
  if (auto v = tree.get_optional<std::string>("experiment.fractions")) cfg.fractions = parse_real_list(*v);
  if (auto v = tree.get_optional<std::string>("experiment.links")) {
    if (*v == "symmetric") cfg.links = LinkModel::symmetric;
    else if (*v == "directional") cfg.links = LinkModel::directional;
    else throw ConfigError("config: experiment.links must be symmetric or directional");
  }

  if (tree.get_optional<std::string>("solver.xi")) {
    double xi = 0;
    read_key(tree, "solver.xi", xi);
    cfg.solver.xi = xi;
  }
  read_key(tree, "solver.max_iter", cfg.solver.max_iter);
  read_key(tree, "solver.fallback_grid", cfg.solver.fallback_grid);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

void write_channel_section(std::ostream& out, const ChannelParamsd& params) {
  out << "[channel]\n"
      << "p_ref_dbm = " << format_double(params.p_ref_dbm) << '\n'
      << "d0_m = " << format_double(params.d0) << '\n'
      << "alpha = " << format_double(params.alpha) << '\n'
      << "sigma_db = " << format_double(params.sigma_db) << '\n'
      << "rss_threshold_dbm = " << format_double(params.rss_threshold_dbm) << '\n';
}

}  // namespace rangefuse
