#include "rangefuse/fd_model_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "rangefuse/errors.hpp"
#include "rangefuse/format.hpp"

namespace rangefuse {

namespace {

std::string canonical_header(const ChannelParamsd& params, double quad_tol) {
  std::ostringstream out;
  out << "p_ref_dbm=" << format_double(params.p_ref_dbm) << '\n'
      << "d0_m=" << format_double(params.d0) << '\n'
      << "alpha=" << format_double(params.alpha) << '\n'
      << "sigma_db=" << format_double(params.sigma_db) << '\n'
      << "rss_threshold_dbm=" << format_double(params.rss_threshold_dbm) << '\n'
      << "quad_tol=" << format_double(quad_tol) << '\n';
  return out.str();
}

}  // namespace

void write_fd_model(std::ostream& out, const ChannelParamsd& params, double quad_tol, const FdModeld& model) {
  out << kFdModelMagic << '\n'
      << canonical_header(params, quad_tol) << "s_mass=" << format_double(model.s_mass()) << '\n'
      << "d_th=" << format_double(model.d_th()) << '\n'
      << "n_knots=" << model.num_knots() << '\n';
  for (Eigen::Index i = 0; i < model.num_knots(); ++i)
    out << format_double(model.distances()(i)) << ',' << format_double(model.values()(i)) << '\n';
}

StoredFdModel read_fd_model(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || line != kFdModelMagic) throw ParseError("not an fd-model v1 file", line_no);
  std::map<std::string, double> header;
  std::vector<double> d, f;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (const auto eq = line.find('='); eq != std::string::npos) {
      double v = 0;
      if (!parse_number(std::string_view(line).substr(eq + 1), v)) throw ParseError("bad header value", line_no);
      header[line.substr(0, eq)] = v;
      continue;
    }
    const auto comma = line.find(',');
    double di = 0, fi = 0;
    if (comma == std::string::npos || !parse_number(std::string_view(line).substr(0, comma), di) ||
        !parse_number(std::string_view(line).substr(comma + 1), fi))
      throw ParseError("expected 'd,f' knot row", line_no);
    d.push_back(di);
    f.push_back(fi);
  }
  auto need = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) throw ParseError(std::string("missing header key ") + key, line_no);
    return it->second;
  };
  ChannelParamsd params(need("p_ref_dbm"), need("alpha"), need("sigma_db"), need("rss_threshold_dbm"), need("d0_m"));
  const double quad_tol = need("quad_tol");
  const double s_mass = need("s_mass");
  if (static_cast<std::size_t>(need("n_knots")) != d.size()) throw ParseError("n_knots does not match rows", line_no);
  FdModeld model(s_mass, Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())),
                 Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
  if (model.d_th() != need("d_th")) throw ParseError("d_th does not match the last knot", line_no);
  return {params, quad_tol, std::move(model)};
}

std::uint64_t fd_model_key(const ChannelParamsd& params, int n_knots, double quad_tol) {
  const std::string text = canonical_header(params, quad_tol) + "n_knots=" + std::to_string(n_knots);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

FdModeld cached_fd_model(const ChannelParamsd& params, int n_knots, double quad_tol,
                         const std::filesystem::path& cache_dir) {
  char name[40];
  std::snprintf(name, sizeof(name), "fd-%016llx.txt",
                static_cast<unsigned long long>(fd_model_key(params, n_knots, quad_tol)));
  const auto path = cache_dir / name;
  if (std::ifstream in(path); in) {
    try {
      auto stored = read_fd_model(in);
      if (stored.params == params && stored.quad_tol == quad_tol && stored.model.num_knots() == n_knots)
        return std::move(stored.model);
    } catch (const std::exception&) {
      // Unreadable cache entry: rebuild below.
    }
  }
  FdModeld model = build_fd_model(params, n_knots, quad_tol);
  std::filesystem::create_directories(cache_dir);
  std::ofstream out(path);
  if (out) write_fd_model(out, params, quad_tol, model);
  return model;
}

}  // namespace rangefuse
