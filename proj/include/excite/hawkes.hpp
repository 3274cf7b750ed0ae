#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "excite/events.hpp"
#include "excite/matrix.hpp"
#include "excite/random.hpp"

namespace excite {

inline constexpr std::size_t kDefaultMaxLag = 96;  // one day of 15-minute buckets

// Fixed lag distributions over 1..dt_max; an edge's kernel is a convex
// combination of them.
struct ImpulseBasis {
  std::size_t dt_max = kDefaultMaxLag;
  Matrix functions;                 // basis x dt_max, column d - 1 holds lag d
  std::vector<std::size_t> edges;   // upper lag of each boxcar; empty if custom

  // Uniform boxcars over (previous edge, edge]; the last edge is dt_max.
  static ImpulseBasis boxcars(std::vector<std::size_t> upper_edges = {8, 32, 96});

  std::size_t size() const noexcept { return functions.rows(); }
  std::vector<double> kernel(std::span<const double> coefficients) const;
  void validate() const;
};

// Per ordered pair (a, b), index a * K + b.
using EdgeCoefficients = std::vector<std::vector<double>>;

struct HawkesNetwork {
  std::vector<std::string> labels;
  std::vector<double> lambda0;  // background events per bucket
  Matrix weights;               // weights(a, b): expected children on b per event on a
  std::size_t dt_max = kDefaultMaxLag;
  std::vector<std::vector<double>> kernels;  // index a * K + b, entry d - 1 is lag d

  std::size_t size() const noexcept { return lambda0.size(); }
  std::span<const double> kernel(std::size_t from, std::size_t to) const { return kernels[from * size() + to]; }

  // W >= 0, lambda0 > 0, kernels of length dt_max summing to 1. Evaluation
  // and simulation also accept lambda0 == 0.
  void validate(bool allow_zero_background = false) const;

  static HawkesNetwork from_basis(std::vector<std::string> labels, std::vector<double> lambda0, Matrix weights,
                                  const ImpulseBasis& basis, const EdgeCoefficients& coefficients);
  // Every edge gets equal weight on each basis function.
  static HawkesNetwork with_uniform_impulse(std::vector<std::string> labels, std::vector<double> lambda0,
                                            Matrix weights, const ImpulseBasis& basis);
};

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct GibbsConfig {
  std::size_t iterations = 1500;
  std::size_t burn_in = 500;
  std::size_t thinning = 1;
  GammaPrior lambda0;
  GammaPrior weight;
  double impulse_concentration = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EventRef {
  std::uint32_t process = 0;
  std::size_t bucket = 0;

  friend bool operator==(const EventRef&, const EventRef&) = default;
};

// Events of a process set ordered by (bucket, process), with each event's
// possible parents: earlier events at lags 1..dt_max on any process.
class EventIndex {
 public:
  struct Candidate {
    std::uint32_t parent;  // index into events()
    std::uint32_t lag;
  };

  EventIndex(const ProcessSet& set, std::size_t dt_max);

  std::span<const EventRef> events() const noexcept { return events_; }
  std::span<const Candidate> candidates(std::size_t event) const {
    return {candidates_.data() + offsets_[event], offsets_[event + 1] - offsets_[event]};
  }
  std::size_t processes() const noexcept { return per_process_.size(); }
  std::size_t events_on(std::size_t process) const { return per_process_[process]; }
  std::size_t n_buckets() const noexcept { return n_buckets_; }
  std::size_t dt_max() const noexcept { return dt_max_; }

 private:
  std::vector<EventRef> events_;
  std::vector<Candidate> candidates_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> per_process_;
  std::size_t n_buckets_ = 0;
  std::size_t dt_max_ = 0;
};

struct ParentAssignment {
  static constexpr std::int64_t kBackground = -1;

  std::vector<EventRef> events;       // ordered by (bucket, process)
  std::vector<std::int64_t> parents;  // kBackground or an index into events

  std::size_t background_count() const noexcept;
};

struct HawkesParameters {
  std::vector<double> lambda0;
  Matrix weights;
  EdgeCoefficients impulse;  // per edge, on the basis simplex
};

// lambda0[b] + sum over events on a at lags 1..dt_max of W[a][b] g_ab[lag].
double intensity(const HawkesNetwork& net, const ProcessSet& set, std::size_t process, std::size_t bucket);

struct LogLikelihood {
  double value = 0.0;                   // -infinity when degenerate
  std::size_t zero_intensity_events = 0;  // events where the intensity is 0

  bool finite() const noexcept { return zero_intensity_events == 0; }
};

// Per-bucket Poisson log-likelihood with mean equal to the intensity.
LogLikelihood log_likelihood(const HawkesNetwork& net, const ProcessSet& set);

// Largest eigenvalue magnitude of a square nonnegative matrix.
double spectral_radius(const Matrix& weights);

struct Simulation {
  ProcessSet events;                   // one indicator per (process, bucket)
  std::vector<std::size_t> raw_counts;  // per process, before collapsing
};

// Branching construction. Throws numeric_error unless the spectral radius of
// the weights is below one.
Simulation simulate_branching(const HawkesNetwork& net, std::size_t n_buckets, std::uint64_t seed);
ProcessSet simulate(const HawkesNetwork& net, std::size_t n_buckets, std::uint64_t seed);

ParentAssignment sample_parents(const HawkesNetwork& net, const ProcessSet& set, std::uint64_t seed);
ParentAssignment sample_parents(const HawkesNetwork& net, const EventIndex& index, Rng& rng);

// Conjugate draws given parents, in the order lambda0, W, impulse. The
// impulse update splits each assigned lag across basis functions in
// proportion to phi_j[lag] * current[j].
HawkesParameters update_parameters(const ParentAssignment& assignment, const ProcessSet& set,
                                   const ImpulseBasis& basis, const GibbsConfig& config,
                                   const EdgeCoefficients& current_impulse, std::uint64_t seed);
HawkesParameters update_parameters(const ParentAssignment& assignment, std::size_t processes,
                                   std::size_t n_buckets, std::span<const std::size_t> events_per_process,
                                   const ImpulseBasis& basis, const GibbsConfig& config,
                                   const EdgeCoefficients& current_impulse, Rng& rng);

struct PosteriorSummary {
  std::vector<std::string> labels;
  std::vector<double> mean_lambda0;
  Matrix mean_weights;
  Matrix ci90_lower;  // 5th percentile per entry
  Matrix ci90_upper;  // 95th percentile per entry
  EdgeCoefficients mean_impulse;
  std::size_t n_samples = 0;

  GibbsConfig config;
  ImpulseBasis basis;
};

struct SweepState {
  std::size_t sweep = 0;
  const ParentAssignment& assignment;
  const HawkesParameters& parameters;
};
using SweepObserver = std::function<void(const SweepState&)>;

// Blocked Gibbs: parents, then lambda0, W and impulse each sweep. Samples
// after burn_in, every thinning-th, feed the summary.
PosteriorSummary fit(const ProcessSet& set, const ImpulseBasis& basis, const GibbsConfig& config,
                     const SweepObserver& observer = {});

}  // namespace excite
