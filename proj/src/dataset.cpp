#include "rangefuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rangefuse/errors.hpp"
#include "rangefuse/format.hpp"

namespace rangefuse {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

enum class Section { none, nodes, rss };

}  // namespace

std::optional<double> MeasurementSet::rss_between(NodeId a, NodeId b) const {
  const auto it = rss.find(key(a, b));
  if (it == rss.end()) return std::nullopt;
  return it->second;
}

const NodeRecord* MeasurementSet::find(NodeId id) const {
  for (const auto& n : nodes)
    if (n.id == id) return &n;
  return nullptr;
}

bool MeasurementSet::linked(NodeId a, NodeId b) const {
  const auto value = rss_between(a, b);
  return value && *value >= channel.rss_threshold_dbm;
}

MeasurementSet parse_measurements(std::istream& in, const ChannelParamsd& channel) {
  MeasurementSet set;
  set.channel = channel;
  std::set<NodeId> ids;
  struct Reading {
    NodeId i, j;
    double value;
    int line;
  };
  std::vector<Reading> readings;
  std::set<std::pair<NodeId, NodeId>> seen;

  Section section = Section::none;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string header = lower(trim(line.substr(1)));
      if (header == "nodes") section = Section::nodes;
      else if (header == "rss") section = Section::rss;
      continue;
    }
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    const auto fields = split(line, ',');
    if (section == Section::none) throw ParseError("data row before any '# nodes' or '# rss' header", line_no);
    if (fields.size() != 3) throw ParseError("expected 3 comma-separated fields, got " +
                                                 std::to_string(fields.size()), line_no);
    if (section == Section::nodes) {
      NodeRecord node;
      if (!parse_number(fields[0], node.id)) throw ParseError("bad node id '" + std::string(fields[0]) + "'", line_no);
      if (!parse_number(fields[1], node.x) || !parse_number(fields[2], node.y) || !std::isfinite(node.x) ||
          !std::isfinite(node.y))
        throw ParseError("bad coordinates for node " + std::to_string(node.id), line_no);
      if (!ids.insert(node.id).second) throw ParseError("duplicate node id " + std::to_string(node.id), line_no);
      set.nodes.push_back(node);
    } else {
      Reading r{};
      r.line = line_no;
      if (!parse_number(fields[0], r.i) || !parse_number(fields[1], r.j))
        throw ParseError("bad node id in rss row", line_no);
      if (!parse_number(fields[2], r.value) || !std::isfinite(r.value))
        throw ParseError("bad rss value '" + std::string(fields[2]) + "'", line_no);
      if (r.i == r.j) throw ParseError("rss row links node " + std::to_string(r.i) + " to itself", line_no);
      if (!seen.insert({r.i, r.j}).second)
        throw ParseError("duplicate rss row " + std::to_string(r.i) + "," + std::to_string(r.j), line_no);
      readings.push_back(r);
    }
  }

  std::map<std::pair<NodeId, NodeId>, std::pair<double, int>> sums;
  for (const auto& r : readings) {
    if (!ids.count(r.i) || !ids.count(r.j))
      throw ParseError("rss row references unknown node " + std::to_string(ids.count(r.i) ? r.j : r.i), r.line);
    auto& acc = sums[MeasurementSet::key(r.i, r.j)];
    acc.first += r.value;
    acc.second += 1;
  }
  for (const auto& [k, acc] : sums) set.rss[k] = acc.second == 1 ? acc.first : acc.first / acc.second;
  return set;
}

MeasurementSet load_measurements(const std::filesystem::path& path, const ChannelParamsd& channel) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open measurement file " + path.string());
  return parse_measurements(in, channel);
}

void save_measurements(const MeasurementSet& set, std::ostream& out) {
  out << "# nodes\n";
  for (const auto& n : set.nodes) out << n.id << ',' << format_double(n.x) << ',' << format_double(n.y) << '\n';
  out << "# rss\n";
  for (const auto& [k, v] : set.rss) out << k.first << ',' << k.second << ',' << format_double(v) << '\n';
}

NeighborCounts neighbor_counts(const MeasurementSet& set, NodeId a, NodeId b) {
  NeighborCounts counts;
  for (const auto& n : set.nodes) {
    if (n.id == a || n.id == b) continue;
    const bool to_a = set.linked(a, n.id);
    const bool to_b = set.linked(b, n.id);
    counts.m += to_a && to_b;
    counts.p += to_a && !to_b;
    counts.q += to_b && !to_a;
  }
  return counts;
}

std::vector<PairEvaluation> evaluate_pairs(const MeasurementSet& set, const FdModeld& model,
                                           const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                           const SolverSettings<double>& settings, bool coordinates_trusted) {
  std::vector<PairEvaluation> rows;
  rows.reserve(pairs.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& [a, b] : pairs) {
    PairEvaluation row;
    row.a = a;
    row.b = b;
    row.err_rss = row.err_conn = row.err_fused = nan;
    const NodeRecord* na = set.find(a);
    const NodeRecord* nb = set.find(b);
    const auto rss = set.rss_between(a, b);
    if (!na || !nb) {
      row.error = "unknown node id";
    } else if (a == b) {
      row.error = "pair repeats a node";
    } else if (!rss) {
      row.error = "no rss reading for the pair";
    } else {
      const auto counts = neighbor_counts(set, a, b);
      row.estimate = estimate_pair(set.channel, model, RssObservation<double>{*rss}, counts, std::nullopt, settings,
                                   RssGate::below_threshold);
      if (coordinates_trusted) {
        const double d = std::hypot(na->x - nb->x, na->y - nb->y);
        row.d_true = d;
        row.estimate.true_distance = d;
        row.err_rss = std::abs(row.estimate.rss_estimate - d);
        row.err_conn = std::abs(row.estimate.conn_estimate - d);
        row.err_fused = std::abs(row.estimate.fused_estimate - d);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::pair<NodeId, NodeId>> parse_pair_list(const std::string& text) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (auto item : split(text, ',')) {
    if (item.empty()) continue;
    auto sep = item.find(':');
    if (sep == std::string_view::npos) sep = item.find('-', 1);
    NodeId a = 0, b = 0;
    if (sep == std::string_view::npos || !parse_number(item.substr(0, sep), a) ||
        !parse_number(item.substr(sep + 1), b))
      throw ConfigError("bad pair '" + std::string(item) + "' (expected a:b)");
    out.emplace_back(a, b);
  }
  return out;
}

void write_pairs_csv(const std::vector<PairEvaluation>& rows, std::ostream& out) {
  out << "pair,d_true,err_rss,err_conn,err_fused\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    out << r.a << ':' << r.b << ',' << format_double(r.d_true.value_or(nan)) << ',' << format_double(r.err_rss)
        << ',' << format_double(r.err_conn) << ',' << format_double(r.err_fused) << '\n';
  }
}

}  // namespace rangefuse
