#ifndef RANGEFUSE_CONFIG_HPP
#define RANGEFUSE_CONFIG_HPP

// INI-style configuration with [channel], [experiment] and [solver] sections.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rangefuse/channel.hpp"
#include "rangefuse/simulator.hpp"

namespace rangefuse {

/// Reads a file into an experiment config; absent keys keep their defaults.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& in);

void write_channel_section(std::ostream& out, const ChannelParamsd& params);

std::vector<double> parse_real_list(const std::string& text);

}  // namespace rangefuse

#endif  // RANGEFUSE_CONFIG_HPP
