#ifndef RANGEFUSE_FD_MODEL_IO_HPP
#define RANGEFUSE_FD_MODEL_IO_HPP

// Versioned text file for a tabulated f(d): a key=value header echoing the
// channel, then one "d_i,f_i" pair per line.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "rangefuse/channel.hpp"
#include "rangefuse/connectivity.hpp"

namespace rangefuse {

inline constexpr const char* kFdModelMagic = "# rangefuse fd-model v1";

struct StoredFdModel {
  ChannelParamsd params;
  double quad_tol;
  FdModeld model;
};

void write_fd_model(std::ostream& out, const ChannelParamsd& params, double quad_tol, const FdModeld& model);
StoredFdModel read_fd_model(std::istream& in);

/// FNV-1a over the canonical text of everything that determines the model.
std::uint64_t fd_model_key(const ChannelParamsd& params, int n_knots, double quad_tol);

/// Loads cache_dir/fd-<key>.txt when it matches, otherwise builds and stores it.
FdModeld cached_fd_model(const ChannelParamsd& params, int n_knots, double quad_tol,
                         const std::filesystem::path& cache_dir);

}  // namespace rangefuse

#endif  // RANGEFUSE_FD_MODEL_IO_HPP
