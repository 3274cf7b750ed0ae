#include "excite/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "excite/error.hpp"

namespace excite {

ImpulseBasis ImpulseBasis::boxcars(std::vector<std::size_t> upper_edges) {
  if (upper_edges.empty()) throw config_error("impulse basis needs at least one boxcar");
  for (std::size_t j = 0; j < upper_edges.size(); ++j) {
    const std::size_t lower = j == 0 ? 0 : upper_edges[j - 1];
    if (upper_edges[j] <= lower) throw config_error("boxcar edges must be strictly increasing and positive");
  }
  ImpulseBasis basis;
  basis.dt_max = upper_edges.back();
  basis.functions = Matrix(upper_edges.size(), basis.dt_max, 0.0);
  for (std::size_t j = 0; j < upper_edges.size(); ++j) {
    const std::size_t lower = j == 0 ? 0 : upper_edges[j - 1];
    const double mass = 1.0 / static_cast<double>(upper_edges[j] - lower);
    for (std::size_t d = lower; d < upper_edges[j]; ++d) basis.functions(j, d) = mass;
  }
  basis.edges = std::move(upper_edges);
  return basis;
}

std::vector<double> ImpulseBasis::kernel(std::span<const double> coefficients) const {
  if (coefficients.size() != size()) throw config_error("impulse coefficient count does not match the basis");
  std::vector<double> g(dt_max, 0.0);
  for (std::size_t j = 0; j < size(); ++j)
    for (std::size_t d = 0; d < dt_max; ++d) g[d] += coefficients[j] * functions(j, d);
  return g;
}

void ImpulseBasis::validate() const {
  if (dt_max == 0) throw config_error("dt_max must be positive");
  if (size() == 0 || functions.cols() != dt_max) throw config_error("impulse basis shape mismatch");
  for (std::size_t j = 0; j < size(); ++j) {
    double total = 0.0;
    for (double x : functions.row(j)) {
      if (x < 0.0) throw config_error("impulse basis must be nonnegative");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw config_error("impulse basis function does not sum to one");
  }
}

void HawkesNetwork::validate(bool allow_zero_background) const {
  const std::size_t K = size();
  if (K == 0) throw config_error("network has no processes");
  if (labels.size() != K) throw config_error("label count does not match process count");
  if (weights.rows() != K || weights.cols() != K) throw config_error("weight matrix must be K x K");
  if (kernels.size() != K * K) throw config_error("need one kernel per ordered pair");
  if (dt_max == 0) throw config_error("dt_max must be positive");
  for (double l : lambda0)
    if (!(allow_zero_background ? l >= 0.0 : l > 0.0) || !std::isfinite(l))
      throw config_error("background rates must be positive");
  for (double w : weights.values())
    if (!(w >= 0.0) || !std::isfinite(w)) throw config_error("weights must be nonnegative");
  for (const auto& g : kernels) {
    if (g.size() != dt_max) throw config_error("kernel length must equal dt_max");
    double total = 0.0;
    for (double x : g) {
      if (x < 0.0) throw config_error("kernel entries must be nonnegative");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw config_error("kernel does not sum to one");
  }
}

HawkesNetwork HawkesNetwork::from_basis(std::vector<std::string> labels, std::vector<double> lambda0, Matrix weights,
                                        const ImpulseBasis& basis, const EdgeCoefficients& coefficients) {
  basis.validate();
  HawkesNetwork net;
  net.labels = std::move(labels);
  net.lambda0 = std::move(lambda0);
  net.weights = std::move(weights);
  net.dt_max = basis.dt_max;
  if (coefficients.size() != net.size() * net.size()) throw config_error("need impulse coefficients per edge");
  for (const auto& c : coefficients) net.kernels.push_back(basis.kernel(c));
  net.validate(true);
  return net;
}

HawkesNetwork HawkesNetwork::with_uniform_impulse(std::vector<std::string> labels, std::vector<double> lambda0,
                                                  Matrix weights, const ImpulseBasis& basis) {
  const std::size_t K = lambda0.size();
  const EdgeCoefficients uniform(K * K, std::vector<double>(basis.size(), 1.0 / static_cast<double>(basis.size())));
  return from_basis(std::move(labels), std::move(lambda0), std::move(weights), basis, uniform);
}

void GibbsConfig::validate() const {
  if (iterations <= burn_in) throw config_error("iterations must exceed burn_in");
  if (thinning < 1) throw config_error("thinning must be at least 1");
  if (!(lambda0.shape > 0.0) || !(lambda0.rate > 0.0) || !(weight.shape > 0.0) || !(weight.rate > 0.0) ||
      !(impulse_concentration > 0.0))
    throw config_error("prior parameters must be positive");
}

EventIndex::EventIndex(const ProcessSet& set, std::size_t dt_max)
    : per_process_(set.streams.size(), 0), n_buckets_(set.grid.n_buckets), dt_max_(dt_max) {
  if (dt_max == 0) throw config_error("dt_max must be positive");
  for (std::size_t p = 0; p < set.streams.size(); ++p) {
    for (auto b : set.streams[p].event_buckets) {
      if (b >= n_buckets_) throw input_error("event outside the grid");
      events_.push_back({static_cast<std::uint32_t>(p), b});
    }
    per_process_[p] = set.streams[p].event_buckets.size();
  }
  std::sort(events_.begin(), events_.end(), [](const EventRef& a, const EventRef& b) {
    return a.bucket != b.bucket ? a.bucket < b.bucket : a.process < b.process;
  });
  offsets_.reserve(events_.size() + 1);
  offsets_.push_back(0);
  std::size_t window_begin = 0;  // first event with bucket >= t - dt_max
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const std::size_t t = events_[i].bucket;
    while (events_[window_begin].bucket + dt_max < t) ++window_begin;
    for (std::size_t j = window_begin; j < i && events_[j].bucket < t; ++j)
      candidates_.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(t - events_[j].bucket)});
    offsets_.push_back(candidates_.size());
  }
}

std::size_t ParentAssignment::background_count() const noexcept {
  return static_cast<std::size_t>(std::count(parents.begin(), parents.end(), kBackground));
}

namespace {

void check_compatible(const HawkesNetwork& net, const ProcessSet& set) {
  if (net.size() != set.streams.size()) throw input_error("network and process set differ in process count");
}

}  // namespace

double intensity(const HawkesNetwork& net, const ProcessSet& set, std::size_t process, std::size_t bucket) {
  check_compatible(net, set);
  if (process >= net.size()) throw input_error("process index out of range");
  if (bucket >= set.grid.n_buckets) throw input_error("bucket index out of range");
  double rate = net.lambda0[process];
  const std::size_t first = bucket > net.dt_max ? bucket - net.dt_max : 0;
  for (std::size_t a = 0; a < net.size(); ++a) {
    const auto& events = set.streams[a].event_buckets;
    const auto g = net.kernel(a, process);
    const double w = net.weights(a, process);
    for (auto it = std::lower_bound(events.begin(), events.end(), first); it != events.end() && *it < bucket; ++it)
      rate += w * g[bucket - *it - 1];
  }
  return rate;
}

LogLikelihood log_likelihood(const HawkesNetwork& net, const ProcessSet& set) {
  net.validate(true);
  check_compatible(net, set);
  const std::size_t K = net.size();
  const std::size_t T = set.grid.n_buckets;

  // Total expected count: background plus each event's kernel mass that
  // stays inside the grid.
  std::vector<std::vector<double>> cumulative(K * K);
  for (std::size_t e = 0; e < K * K; ++e) {
    cumulative[e].resize(net.dt_max + 1, 0.0);
    for (std::size_t d = 1; d <= net.dt_max; ++d) cumulative[e][d] = cumulative[e][d - 1] + net.kernels[e][d - 1];
  }
  double compensator = 0.0;
  for (std::size_t b = 0; b < K; ++b) compensator += net.lambda0[b] * static_cast<double>(T);
  for (std::size_t a = 0; a < K; ++a) {
    for (auto s : set.streams[a].event_buckets) {
      const std::size_t reach = std::min(net.dt_max, T - 1 - s);
      for (std::size_t b = 0; b < K; ++b) compensator += net.weights(a, b) * cumulative[a * K + b][reach];
    }
  }

  const EventIndex index(set, net.dt_max);
  LogLikelihood ll;
  double log_sum = 0.0;
  for (std::size_t i = 0; i < index.events().size(); ++i) {
    const auto b = index.events()[i].process;
    double rate = net.lambda0[b];
    for (const auto& c : index.candidates(i)) {
      const auto a = index.events()[c.parent].process;
      rate += net.weights(a, b) * net.kernel(a, b)[c.lag - 1];
    }
    if (rate > 0.0)
      log_sum += std::log(rate);
    else
      ++ll.zero_intensity_events;
  }
  ll.value = ll.finite() ? log_sum - compensator : -std::numeric_limits<double>::infinity();
  return ll;
}

namespace {

// Power iteration on A + I for an irreducible block A, where the shifted
// matrix is primitive and shares the Perron vector; Collatz-Wielandt bounds
// bracket the root.
double irreducible_radius(const Matrix& a) {
  const std::size_t n = a.rows();
  constexpr double tol = 1e-10;
  constexpr int max_iterations = 10000;
  std::vector<double> x(n, 1.0), y(n);
  double previous = std::numeric_limits<double>::infinity();
  double estimate = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, top = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x[j];
      y[i] = s;
      lo = std::min(lo, s / x[i]);
      hi = std::max(hi, s / x[i]);
      top = std::max(top, s);
    }
    estimate = top;  // x is max-normalized, so this is the growth factor
    if (hi - lo < tol) return std::max(0.0, 0.5 * (hi + lo) - 1.0);
    if (std::abs(estimate - previous) < tol) break;
    previous = estimate;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / top;
  }
  return std::max(0.0, estimate - 1.0);
}

}  // namespace

double spectral_radius(const Matrix& weights) {
  if (!weights.square()) throw input_error("spectral radius needs a square matrix");
  const std::size_t n = weights.rows();
  if (n == 0) return 0.0;
  for (double w : weights.values())
    if (!(w >= 0.0) || !std::isfinite(w)) throw input_error("spectral radius needs a nonnegative finite matrix");

  // The radius is the largest over strongly connected components.
  std::vector<char> reach(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) reach[i * n + j] = weights(i, j) > 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k * n + j]) reach[i * n + j] = 1;

  std::vector<char> done(n, 0);
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> members{i};
    done[i] = 1;
    for (std::size_t j = i + 1; j < n; ++j)
      if (!done[j] && reach[i * n + j] && reach[j * n + i]) {
        members.push_back(j);
        done[j] = 1;
      }
    if (members.size() == 1 && !reach[i * n + i]) continue;  // acyclic node
    Matrix block(members.size(), members.size());
    for (std::size_t r = 0; r < members.size(); ++r)
      for (std::size_t c = 0; c < members.size(); ++c) block(r, c) = weights(members[r], members[c]);
    radius = std::max(radius, irreducible_radius(block));
  }
  return radius;
}

Simulation simulate_branching(const HawkesNetwork& net, std::size_t n_buckets, std::uint64_t seed) {
  net.validate(true);
  if (n_buckets < 2) throw config_error("simulation needs at least two buckets");
  const double rho = spectral_radius(net.weights);
  if (rho >= 1.0) throw numeric_error("non-stationary network: spectral radius " + std::to_string(rho) + " >= 1");

  const std::size_t K = net.size();
  Rng rng(seed);
  std::vector<std::discrete_distribution<std::size_t>> lag_dist;
  lag_dist.reserve(K * K);
  for (const auto& g : net.kernels) lag_dist.emplace_back(g.begin(), g.end());

  Simulation sim;
  sim.raw_counts.assign(K, 0);
  std::vector<std::vector<char>> occupied(K, std::vector<char>(n_buckets, 0));
  std::deque<EventRef> pending;

  for (std::size_t p = 0; p < K; ++p) {
    if (net.lambda0[p] <= 0.0) continue;
    std::poisson_distribution<std::size_t> background(net.lambda0[p]);
    for (std::size_t t = 0; t < n_buckets; ++t) {
      const std::size_t n = background(rng);
      for (std::size_t i = 0; i < n; ++i) pending.push_back({static_cast<std::uint32_t>(p), t});
    }
  }
  while (!pending.empty()) {
    const EventRef e = pending.front();
    pending.pop_front();
    ++sim.raw_counts[e.process];
    occupied[e.process][e.bucket] = 1;
    for (std::size_t b = 0; b < K; ++b) {
      const double w = net.weights(e.process, b);
      if (w <= 0.0) continue;
      const std::size_t children = std::poisson_distribution<std::size_t>(w)(rng);
      for (std::size_t c = 0; c < children; ++c) {
        const std::size_t t = e.bucket + 1 + lag_dist[e.process * K + b](rng);
        if (t < n_buckets) pending.push_back({static_cast<std::uint32_t>(b), t});
      }
    }
  }

  sim.events.grid = {0, kDefaultBucketWidth, n_buckets};
  for (std::size_t p = 0; p < K; ++p) {
    EventStream stream{net.labels[p], {}};
    for (std::size_t t = 0; t < n_buckets; ++t)
      if (occupied[p][t]) stream.event_buckets.push_back(t);
    sim.events.streams.push_back(std::move(stream));
  }
  return sim;
}

ProcessSet simulate(const HawkesNetwork& net, std::size_t n_buckets, std::uint64_t seed) {
  return simulate_branching(net, n_buckets, seed).events;
}

ParentAssignment sample_parents(const HawkesNetwork& net, const EventIndex& index, Rng& rng) {
  if (net.size() != index.processes()) throw input_error("network and events differ in process count");
  if (net.dt_max != index.dt_max()) throw input_error("network and event index differ in dt_max");
  ParentAssignment out;
  out.events.assign(index.events().begin(), index.events().end());
  out.parents.resize(out.events.size());
  std::vector<double> weights;
  for (std::size_t i = 0; i < out.events.size(); ++i) {
    const auto b = out.events[i].process;
    const auto candidates = index.candidates(i);
    weights.resize(candidates.size() + 1);
    weights[0] = net.lambda0[b];
    double total = weights[0];
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto a = out.events[candidates[c].parent].process;
      weights[c + 1] = net.weights(a, b) * net.kernel(a, b)[candidates[c].lag - 1];
      total += weights[c + 1];
    }
    const auto pick = sample_categorical(weights, total, rng);
    out.parents[i] = pick == 0 ? ParentAssignment::kBackground : static_cast<std::int64_t>(candidates[pick - 1].parent);
  }
  return out;
}

ParentAssignment sample_parents(const HawkesNetwork& net, const ProcessSet& set, std::uint64_t seed) {
  net.validate();
  check_compatible(net, set);
  const EventIndex index(set, net.dt_max);
  Rng rng(seed);
  return sample_parents(net, index, rng);
}

HawkesParameters update_parameters(const ParentAssignment& assignment, std::size_t processes, std::size_t n_buckets,
                                   std::span<const std::size_t> events_per_process, const ImpulseBasis& basis,
                                   const GibbsConfig& config, const EdgeCoefficients& current_impulse, Rng& rng) {
  const std::size_t K = processes;
  const std::size_t B = basis.size();
  if (events_per_process.size() != K) throw input_error("per-process event counts have the wrong length");
  if (current_impulse.size() != K * K) throw input_error("need current impulse coefficients per edge");
  if (assignment.parents.size() != assignment.events.size()) throw input_error("malformed parent assignment");

  std::vector<double> background(K, 0.0);
  Matrix children(K, K, 0.0);
  std::vector<std::vector<double>> soft(K * K, std::vector<double>(B, 0.0));
  std::vector<double> resp(B);
  for (std::size_t i = 0; i < assignment.events.size(); ++i) {
    const auto& child = assignment.events[i];
    const auto parent = assignment.parents[i];
    if (parent == ParentAssignment::kBackground) {
      background[child.process] += 1.0;
      continue;
    }
    const auto& from = assignment.events.at(static_cast<std::size_t>(parent));
    if (from.bucket >= child.bucket || child.bucket - from.bucket > basis.dt_max)
      throw input_error("parent lag outside 1..dt_max");
    const std::size_t lag = child.bucket - from.bucket;
    children(from.process, child.process) += 1.0;
    const auto& theta = current_impulse[from.process * K + child.process];
    double total = 0.0;
    for (std::size_t j = 0; j < B; ++j) {
      resp[j] = basis.functions(j, lag - 1) * theta[j];
      total += resp[j];
    }
    if (total <= 0.0) continue;
    auto& s = soft[from.process * K + child.process];
    for (std::size_t j = 0; j < B; ++j) s[j] += resp[j] / total;
  }

  HawkesParameters next;
  next.lambda0.resize(K);
  for (std::size_t b = 0; b < K; ++b)
    next.lambda0[b] = sample_gamma(config.lambda0.shape + background[b],
                                   config.lambda0.rate + static_cast<double>(n_buckets), rng);
  next.weights = Matrix(K, K);
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t b = 0; b < K; ++b)
      next.weights(a, b) = sample_gamma(config.weight.shape + children(a, b),
                                        config.weight.rate + static_cast<double>(events_per_process[a]), rng);
  next.impulse.resize(K * K);
  std::vector<double> concentration(B);
  for (std::size_t e = 0; e < K * K; ++e) {
    for (std::size_t j = 0; j < B; ++j) concentration[j] = config.impulse_concentration + soft[e][j];
    next.impulse[e] = sample_dirichlet(concentration, rng);
  }
  return next;
}

HawkesParameters update_parameters(const ParentAssignment& assignment, const ProcessSet& set,
                                   const ImpulseBasis& basis, const GibbsConfig& config,
                                   const EdgeCoefficients& current_impulse, std::uint64_t seed) {
  config.validate();
  basis.validate();
  std::vector<std::size_t> counts;
  for (const auto& s : set.streams) counts.push_back(s.event_buckets.size());
  Rng rng(seed);
  return update_parameters(assignment, set.streams.size(), set.grid.n_buckets, counts, basis, config,
                           current_impulse, rng);
}

namespace {

HawkesNetwork network_from(const std::vector<std::string>& labels, const HawkesParameters& p,
                           const ImpulseBasis& basis) {
  HawkesNetwork net;
  net.labels = labels;
  net.lambda0 = p.lambda0;
  net.weights = p.weights;
  net.dt_max = basis.dt_max;
  net.kernels.reserve(p.impulse.size());
  for (const auto& c : p.impulse) net.kernels.push_back(basis.kernel(c));
  return net;
}

double interpolated_percentile(std::vector<double>& samples, double q) {
  std::sort(samples.begin(), samples.end());
  const double h = q * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

}  // namespace

PosteriorSummary fit(const ProcessSet& set, const ImpulseBasis& basis, const GibbsConfig& config,
                     const SweepObserver& observer) {
  config.validate();
  basis.validate();
  set.validate();
  const std::size_t K = set.streams.size();
  if (K == 0) throw config_error("nothing to fit: no processes");
  const std::size_t T = set.grid.n_buckets;
  const std::size_t B = basis.size();

  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  for (const auto& s : set.streams) {
    labels.push_back(s.label);
    counts.push_back(s.event_buckets.size());
  }

  const EventIndex index(set, basis.dt_max);
  Rng rng(config.seed);

  HawkesParameters params;
  params.lambda0.resize(K);
  for (std::size_t b = 0; b < K; ++b)
    params.lambda0[b] = std::max(1.0, static_cast<double>(counts[b])) / (2.0 * static_cast<double>(T));
  params.weights = Matrix(K, K, 0.1);
  params.impulse.assign(K * K, std::vector<double>(B, 1.0 / static_cast<double>(B)));

  std::vector<std::vector<double>> lambda_samples(K), weight_samples(K * K);
  std::vector<double> lambda_sum(K, 0.0);
  Matrix weight_sum(K, K, 0.0);
  EdgeCoefficients impulse_sum(K * K, std::vector<double>(B, 0.0));
  std::size_t retained = 0;

  for (std::size_t sweep = 0; sweep < config.iterations; ++sweep) {
    const auto net = network_from(labels, params, basis);
    const auto assignment = sample_parents(net, index, rng);
    params = update_parameters(assignment, K, T, counts, basis, config, params.impulse, rng);
    if (observer) observer(SweepState{sweep, assignment, params});

    if (sweep < config.burn_in || (sweep - config.burn_in) % config.thinning != 0) continue;
    ++retained;
    for (std::size_t b = 0; b < K; ++b) {
      lambda_sum[b] += params.lambda0[b];
      lambda_samples[b].push_back(params.lambda0[b]);
    }
    for (std::size_t a = 0; a < K; ++a) {
      for (std::size_t b = 0; b < K; ++b) {
        weight_sum(a, b) += params.weights(a, b);
        weight_samples[a * K + b].push_back(params.weights(a, b));
      }
    }
    for (std::size_t e = 0; e < K * K; ++e)
      for (std::size_t j = 0; j < B; ++j) impulse_sum[e][j] += params.impulse[e][j];
  }

  PosteriorSummary summary;
  summary.labels = labels;
  summary.n_samples = retained;
  summary.config = config;
  summary.basis = basis;
  const double n = static_cast<double>(retained);
  summary.mean_lambda0.resize(K);
  for (std::size_t b = 0; b < K; ++b) summary.mean_lambda0[b] = lambda_sum[b] / n;
  summary.mean_weights = Matrix(K, K);
  summary.ci90_lower = Matrix(K, K);
  summary.ci90_upper = Matrix(K, K);
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = 0; b < K; ++b) {
      summary.mean_weights(a, b) = weight_sum(a, b) / n;
      auto& samples = weight_samples[a * K + b];
      summary.ci90_lower(a, b) = interpolated_percentile(samples, 0.05);
      summary.ci90_upper(a, b) = interpolated_percentile(samples, 0.95);
    }
  }
  summary.mean_impulse = impulse_sum;
  for (auto& c : summary.mean_impulse)
    for (auto& x : c) x /= n;
  return summary;
}

}  // namespace excite
