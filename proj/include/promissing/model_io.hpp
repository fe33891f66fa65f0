#pragma once

#include <filesystem>
#include <string>

#include "promissing/network.hpp"

namespace promissing {

inline constexpr int kModelFormatVersion = 1;

// Line-oriented text format, first line `promissing-model 1`, then one
// `node` line per node, one `param <node> <W|b|wc> <rows> <cols> <values>`
// line per parameter block (row-major, hex floats so values survive
// exactly), `head` lines, and the `output` line.
std::string serialize_network(const Network& net);
Network deserialize_network(const std::string& text);

void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace promissing
