#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

namespace excite::testing {

double brute_force_intensity(const HawkesNetwork& net, const ProcessSet& set, std::size_t process,
                             std::size_t bucket) {
  double lambda = net.lambda0[process];
  for (std::size_t a = 0; a < set.streams.size(); ++a) {
    for (std::size_t d = 1; d <= net.dt_max; ++d) {
      if (d > bucket) break;
      const auto& ev = set.streams[a].event_buckets;
      const bool present = std::find(ev.begin(), ev.end(), bucket - d) != ev.end();
      if (present) lambda += net.weights(a, process) * net.kernels[a * net.size() + process][d - 1];
    }
  }
  return lambda;
}

std::vector<std::size_t> sort_jump_oracle(const std::vector<double>& returns, double percentile, bool up) {
  const std::size_t n = returns.size();
  std::vector<std::pair<double, std::size_t>> v;
  for (std::size_t i = 0; i < n; ++i) v.emplace_back(up ? returns[i] : -returns[i], i);
  std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  // Count of the upper tail, computed in exact integer arithmetic on
  // percentiles given to at most 6 decimals.
  const auto p_micro = static_cast<long long>(std::llround(percentile * 1e6));
  const long long tail_micro = static_cast<long long>(n) * (1000000 - p_micro);
  const auto k = static_cast<std::size_t>((tail_micro + 999999) / 1000000);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < k && j < n; ++j)
    if (v[j].first > 0.0) out.push_back(v[j].second + 1);
  std::sort(out.begin(), out.end());
  return out;
}

double tv_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<std::size_t> best_permutation(const Matrix& fitted, const Matrix& truth) {
  std::vector<std::size_t> perm(truth.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t k = 0; k < perm.size(); ++k) cost += tv_distance(fitted.row(perm[k]), truth.row(k));
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<double> matched_tv(const Matrix& fitted, const Matrix& truth) {
  const auto perm = best_permutation(fitted, truth);
  std::vector<double> out;
  for (std::size_t k = 0; k < perm.size(); ++k) out.push_back(tv_distance(fitted.row(perm[k]), truth.row(k)));
  return out;
}

std::vector<double> stationary_rates(const Matrix& weights, const std::vector<double>& lambda0) {
  const auto k = static_cast<Eigen::Index>(lambda0.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    b(i) = lambda0[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < k; ++j)
      a(i, j) -= weights(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
  }
  const Eigen::VectorXd x = a.partialPivLu().solve(b);
  return {x.data(), x.data() + k};
}

ProcessSet random_process_set(Rng& rng, std::size_t processes, std::size_t n_buckets, double p) {
  ProcessSet set{BucketGrid{0, 900, n_buckets}, {}};
  for (std::size_t a = 0; a < processes; ++a) {
    EventStream s{"p" + std::to_string(a), {}};
    for (std::size_t t = 0; t < n_buckets; ++t)
      if (uniform01(rng) < p) s.event_buckets.push_back(t);
    set.streams.push_back(std::move(s));
  }
  return set;
}

HawkesNetwork random_network(Rng& rng, std::size_t processes, const ImpulseBasis& basis, double max_weight) {
  std::vector<std::string> labels;
  std::vector<double> lambda0;
  Matrix w(processes, processes);
  EdgeCoefficients coeffs;
  const std::vector<double> conc(basis.size(), 1.0);
  for (std::size_t a = 0; a < processes; ++a) {
    labels.push_back("p" + std::to_string(a));
    lambda0.push_back(0.005 + 0.05 * uniform01(rng));
    for (std::size_t b = 0; b < processes; ++b) w(a, b) = max_weight * uniform01(rng);
  }
  for (std::size_t e = 0; e < processes * processes; ++e) coeffs.push_back(sample_dirichlet(conc, rng));
  return HawkesNetwork::from_basis(labels, lambda0, w, basis, coeffs);
}

std::vector<HeatmapCell> heatmap_cells(const std::string& svg) {
  static const std::regex cell(
      R"re(<rect class="cell"[^>]*data-from="([^"]*)" data-to="([^"]*)" data-weight="([^"]*)" data-shade="(\d+)")re");
  std::vector<HeatmapCell> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), cell), end; it != end; ++it)
    out.push_back({(*it)[1], (*it)[2], std::stod((*it)[3]), std::stoi((*it)[4])});
  return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("excite_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path source_dir() { return EXCITE_SOURCE_DIR; }

}  // namespace excite::testing
