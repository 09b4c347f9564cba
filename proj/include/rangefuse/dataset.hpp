#ifndef RANGEFUSE_DATASET_HPP
#define RANGEFUSE_DATASET_HPP

// Measured networks: node coordinates plus pairwise mean RSS, and the
// per-pair error table of the three ranging methods.
//
// File layout (comma separated, '#' comments):
//   # nodes
//   id,x,y
//   # rss
//   id_i,id_j,mean_dbm

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rangefuse/channel.hpp"
#include "rangefuse/connectivity.hpp"
#include "rangefuse/estimate.hpp"
#include "rangefuse/fusion.hpp"

namespace rangefuse {

using NodeId = std::int64_t;

struct NodeRecord {
  NodeId id = 0;
  double x = 0;
  double y = 0;

  bool operator==(const NodeRecord&) const = default;
};

struct MeasurementSet {
  std::vector<NodeRecord> nodes;
  /// Keyed by (min id, max id); one mean RSS per unordered pair.
  std::map<std::pair<NodeId, NodeId>, double> rss;
  ChannelParamsd channel;

  static std::pair<NodeId, NodeId> key(NodeId a, NodeId b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }
  std::optional<double> rss_between(NodeId a, NodeId b) const;
  const NodeRecord* find(NodeId id) const;
  bool linked(NodeId a, NodeId b) const;

  bool operator==(const MeasurementSet&) const = default;
};

MeasurementSet parse_measurements(std::istream& in, const ChannelParamsd& channel);
MeasurementSet load_measurements(const std::filesystem::path& path, const ChannelParamsd& channel);
void save_measurements(const MeasurementSet& set, std::ostream& out);

/// Neighbor counts of (a, b) from the RSS map thresholded at rss_threshold_dbm.
NeighborCounts neighbor_counts(const MeasurementSet& set, NodeId a, NodeId b);

struct PairEvaluation {
  NodeId a = 0;
  NodeId b = 0;
  std::optional<double> d_true;
  double err_rss = 0;
  double err_conn = 0;
  double err_fused = 0;
  EstimateRecord<double> estimate;
  std::string error;  ///< non-empty when the pair could not be evaluated

  bool ok() const { return error.empty(); }
};

std::vector<PairEvaluation> evaluate_pairs(const MeasurementSet& set, const FdModeld& model,
                                           const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                           const SolverSettings<double>& settings = {},
                                           bool coordinates_trusted = true);

/// "a:b,c:d" (or "a-b,c-d") into id pairs.
std::vector<std::pair<NodeId, NodeId>> parse_pair_list(const std::string& text);

void write_pairs_csv(const std::vector<PairEvaluation>& rows, std::ostream& out);

}  // namespace rangefuse

#endif  // RANGEFUSE_DATASET_HPP
