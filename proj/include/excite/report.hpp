#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "excite/hawkes.hpp"
#include "excite/topics.hpp"

namespace excite {

// Header `doc_id,timestamp,source,theta_0..theta_{K-1}`; values round-trip
// exactly.
void write_theta_csv(std::ostream& out, std::span<const DocTopicMix> mixes, std::size_t topics);
void write_theta_csv(const std::filesystem::path& path, std::span<const DocTopicMix> mixes, std::size_t topics);
std::vector<DocTopicMix> read_theta_csv(const std::filesystem::path& path);

// Labels across the first row and down the first column; cell (a, b) is the
// posterior mean of W[a][b] with six decimals.
void write_weight_csv(std::ostream& out, const PosteriorSummary& summary);

nlohmann::ordered_json posterior_json(const PosteriorSummary& summary);

// Rows are source processes, columns are targets, in label order. Darker
// fill means larger weight; every cell carries its value in data-weight.
void write_heatmap_svg(std::ostream& out, const PosteriorSummary& summary, const std::string& title);

// Network description:
//   {"labels": [...], "lambda0": [...], "weights": [[...], ...],
//    "basis_edges": [8, 32, 96], "impulse": [c0, c1, c2] or per-edge rows}
// basis_edges and impulse are optional (defaults: 8/32/96, uniform).
HawkesNetwork network_from_json(const nlohmann::json& desc);
HawkesNetwork load_network(const std::filesystem::path& path);

}  // namespace excite
