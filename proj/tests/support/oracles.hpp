#pragma once

// Reference implementations used to check the library. They favour
// directness over speed and share no code with the code under test.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "excite/events.hpp"
#include "excite/hawkes.hpp"
#include "excite/matrix.hpp"
#include "excite/random.hpp"

namespace excite::testing {

// lambda0[b] + sum_a sum_d N_a[t - d] W[a][b] g_ab[d] by a plain triple loop.
double brute_force_intensity(const HawkesNetwork& net, const ProcessSet& set, std::size_t process, std::size_t bucket);

// Buckets that should carry a jump: the ceil((1 - p) n) largest values of the
// (possibly negated) returns, kept only if positive, shifted to the
// destination bucket. Assumes distinct values.
std::vector<std::size_t> sort_jump_oracle(const std::vector<double>& returns, double percentile, bool up);

double tv_distance(std::span<const double> a, std::span<const double> b);

// Permutation of fitted rows minimising the summed distance to the truth,
// found by enumeration; returns the per-topic distances under it.
std::vector<double> matched_tv(const Matrix& fitted, const Matrix& truth);
std::vector<std::size_t> best_permutation(const Matrix& fitted, const Matrix& truth);

// (I - W^T)^{-1} lambda0 via a dense LU solve.
std::vector<double> stationary_rates(const Matrix& weights, const std::vector<double>& lambda0);

// Random event streams with per-bucket event probability p.
ProcessSet random_process_set(Rng& rng, std::size_t processes, std::size_t n_buckets, double p);

// Random network with kernels drawn from a Dirichlet over the basis.
HawkesNetwork random_network(Rng& rng, std::size_t processes, const ImpulseBasis& basis, double max_weight);

struct HeatmapCell {
  std::string from, to;
  double weight = 0.0;
  int shade = 0;
};

// Cells of a heatmap SVG in document order, read from their data attributes.
std::vector<HeatmapCell> heatmap_cells(const std::string& svg);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_file(const std::filesystem::path& path);

// Source tree root, for bundled data.
std::filesystem::path source_dir();

}  // namespace excite::testing
