#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "excite/error.hpp"
#include "excite/hawkes.hpp"
#include "oracles.hpp"

using namespace excite;
using excite::testing::brute_force_intensity;
using excite::testing::random_network;
using excite::testing::random_process_set;
using excite::testing::stationary_rates;

namespace {

ProcessSet make_set(std::size_t n_buckets, std::vector<std::vector<std::size_t>> events) {
  ProcessSet set{BucketGrid{0, 900, n_buckets}, {}};
  for (std::size_t a = 0; a < events.size(); ++a) set.streams.push_back({"p" + std::to_string(a), events[a]});
  return set;
}

std::vector<std::string> labels_for(std::size_t K) {
  std::vector<std::string> out;
  for (std::size_t a = 0; a < K; ++a) out.push_back("p" + std::to_string(a));
  return out;
}

HawkesNetwork three_process_truth() {
  const auto basis = ImpulseBasis::boxcars();
  const auto W = Matrix::from_rows({{0.2, 0.4, 0.0}, {0.0, 0.2, 0.4}, {0.2, 0.0, 0.0}});
  EdgeCoefficients coeffs(9, std::vector<double>{0.8, 0.15, 0.05});
  return HawkesNetwork::from_basis(labels_for(3), {0.01, 0.01, 0.01}, W, basis, coeffs);
}

}  // namespace

TEST_SUITE("hawkes") {
  TEST_CASE("boxcar basis") {
    const auto basis = ImpulseBasis::boxcars();
    REQUIRE(basis.size() == 3);
    CHECK(basis.dt_max == 96);
    CHECK(basis.functions(0, 0) == doctest::Approx(1.0 / 8));
    CHECK(basis.functions(0, 8) == 0.0);
    CHECK(basis.functions(1, 8) == doctest::Approx(1.0 / 24));
    CHECK(basis.functions(2, 95) == doctest::Approx(1.0 / 64));
    const std::vector<double> c{0.2, 0.3, 0.5};
    const auto g = basis.kernel(c);
    CHECK(std::accumulate(g.begin(), g.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(ImpulseBasis::boxcars({8, 8, 96}), Error);
    CHECK_THROWS_AS(ImpulseBasis::boxcars({}), Error);
  }

  TEST_CASE("network validation") {
    auto net = HawkesNetwork::with_uniform_impulse(labels_for(2), {0.1, 0.1}, Matrix(2, 2, 0.1),
                                                   ImpulseBasis::boxcars());
    CHECK_NOTHROW(net.validate());
    auto bad = net;
    bad.weights(0, 1) = -0.1;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = net;
    bad.lambda0[0] = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK_NOTHROW(bad.validate(true));
    bad = net;
    bad.kernels[3][0] += 0.01;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("intensity examples") {
    const auto basis = ImpulseBasis::boxcars({1, 4});
    EdgeCoefficients coeffs(4, std::vector<double>{1.0, 0.0});
    const auto net = HawkesNetwork::from_basis(labels_for(2), {0.1, 0.2}, Matrix::from_rows({{0.0, 0.7}, {0.0, 0.0}}),
                                               basis, coeffs);
    const auto set = make_set(10, {{3}, {}});
    CHECK(intensity(net, set, 1, 3) == doctest::Approx(0.2));
    CHECK(intensity(net, set, 1, 4) == doctest::Approx(0.9));
    CHECK(intensity(net, set, 1, 5) == doctest::Approx(0.2));
    CHECK(intensity(net, set, 0, 4) == doctest::Approx(0.1));
    CHECK(intensity(net, set, 1, 0) == doctest::Approx(0.2));
    CHECK_THROWS_AS(intensity(net, set, 2, 0), Error);
    CHECK_THROWS_AS(intensity(net, set, 0, 10), Error);
  }

  TEST_CASE("intensity matches the direct triple sum") {
    Rng rng(2024);
    const auto basis = ImpulseBasis::boxcars({2, 5, 12});
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t K = 1 + trial % 4;
      const auto net = random_network(rng, K, basis, 0.6);
      const auto set = random_process_set(rng, K, 60, 0.2);
      for (std::size_t p = 0; p < K; ++p)
        for (std::size_t t = 0; t < 60; ++t)
          CHECK(std::abs(intensity(net, set, p, t) - brute_force_intensity(net, set, p, t)) <= 1e-12);
    }
  }

  TEST_CASE("log-likelihood closed form and zero intensity") {
    const auto basis = ImpulseBasis::boxcars({2, 6});
    const auto net = HawkesNetwork::with_uniform_impulse(labels_for(3), {0.3, 0.3, 0.3}, Matrix(3, 3, 0.2), basis);
    const auto empty = make_set(50, {{}, {}, {}});
    const auto ll = log_likelihood(net, empty);
    CHECK(ll.finite());
    CHECK(ll.value == doctest::Approx(-3 * 50 * 0.3));

    auto zero = net;
    zero.lambda0 = {0.0, 0.3, 0.3};
    zero.weights = Matrix(3, 3, 0.0);
    const auto degenerate = log_likelihood(zero, make_set(50, {{4, 9}, {1}, {}}));
    CHECK_FALSE(degenerate.finite());
    CHECK(degenerate.zero_intensity_events == 2);
    CHECK(std::isinf(degenerate.value));
    CHECK(degenerate.value < 0);
  }

  TEST_CASE("log-likelihood agrees with the per-bucket Poisson sum") {
    Rng rng(5);
    const auto basis = ImpulseBasis::boxcars({3, 8});
    for (int trial = 0; trial < 10; ++trial) {
      const auto net = random_network(rng, 3, basis, 0.5);
      const auto set = random_process_set(rng, 3, 80, 0.1);
      double expected = 0.0;
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t t = 0; t < 80; ++t) {
          const double lambda = brute_force_intensity(net, set, p, t);
          const auto& ev = set.streams[p].event_buckets;
          const bool hit = std::find(ev.begin(), ev.end(), t) != ev.end();
          expected += (hit ? std::log(lambda) : 0.0) - lambda;
        }
      CHECK(log_likelihood(net, set).value == doctest::Approx(expected).epsilon(1e-10));
    }
  }

  TEST_CASE("the best single-event placement is where the intensity peaks") {
    const auto basis = ImpulseBasis::boxcars({1, 4});
    EdgeCoefficients coeffs{{0.7, 0.3}};
    const auto net = HawkesNetwork::from_basis({"x"}, {0.05}, Matrix::from_rows({{0.8}}), basis, coeffs);
    // The existing event comes first, so a new one cannot raise its rate.
    const auto base = make_set(10, {{0}});
    std::size_t best_ll = 0, best_rate = 0;
    double top_ll = -1e300, top_rate = -1.0;
    for (std::size_t t = 0; t < 10; ++t) {
      if (t == 0) continue;
      auto set = base;
      auto& ev = set.streams[0].event_buckets;
      ev.insert(std::upper_bound(ev.begin(), ev.end(), t), t);
      const double ll = log_likelihood(net, set).value;
      if (ll > top_ll) top_ll = ll, best_ll = t;
      const double rate = intensity(net, base, 0, t);
      if (rate > top_rate) top_rate = rate, best_rate = t;
    }
    CHECK(best_ll == 1);
    CHECK(best_ll == best_rate);
  }

  TEST_CASE("log-likelihood is invariant under consistent relabeling") {
    Rng rng(11);
    const auto basis = ImpulseBasis::boxcars({2, 6, 10});
    const auto net = random_network(rng, 3, basis, 0.4);
    const auto set = random_process_set(rng, 3, 200, 0.08);
    const std::vector<std::size_t> perm{2, 0, 1};
    HawkesNetwork pnet = net;
    ProcessSet pset = set;
    for (std::size_t i = 0; i < 3; ++i) {
      pnet.labels[i] = net.labels[perm[i]];
      pnet.lambda0[i] = net.lambda0[perm[i]];
      pset.streams[i] = set.streams[perm[i]];
      for (std::size_t j = 0; j < 3; ++j) {
        pnet.weights(i, j) = net.weights(perm[i], perm[j]);
        pnet.kernels[i * 3 + j] = net.kernels[perm[i] * 3 + perm[j]];
      }
    }
    CHECK(log_likelihood(pnet, pset).value == doctest::Approx(log_likelihood(net, set).value).epsilon(1e-12));
  }

  TEST_CASE("spectral radius") {
    CHECK(spectral_radius(Matrix::from_rows({{0.5}})) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(spectral_radius(Matrix::from_rows({{0, 0.3}, {0.3, 0}})) == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(spectral_radius(Matrix(3, 3, 0.0)) == doctest::Approx(0.0));
    CHECK(spectral_radius(Matrix::from_rows({{0.2, 5.0}, {0.0, 0.4}})) == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(spectral_radius(Matrix::from_rows({{0.0, 1.0}, {0.0, 0.0}})) == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(spectral_radius(Matrix::from_rows({{0.5, 1.0}, {0.0, 0.5}})) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(spectral_radius(Matrix::from_rows({{0.1, 0.0, 0.0}, {0.3, 0.0, 0.6}, {0.0, 0.6, 0.0}})) ==
          doctest::Approx(0.6).epsilon(1e-9));
    CHECK(spectral_radius(Matrix(4, 4, 0.25)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(spectral_radius(Matrix(2, 3, 0.1)), Error);
  }

  TEST_CASE("simulation") {
    const auto basis = ImpulseBasis::boxcars();
    const auto unstable =
        HawkesNetwork::with_uniform_impulse({"x"}, {0.01}, Matrix::from_rows({{1.2}}), basis);
    try {
      simulate(unstable, 1000, 1);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numeric);
      CHECK(std::string(e.what()).find("non-stationary") != std::string::npos);
    }

    const auto net = three_process_truth();
    const auto a = simulate(net, 5000, 77);
    CHECK(a == simulate(net, 5000, 77));
    CHECK_FALSE(a == simulate(net, 5000, 78));
    CHECK_NOTHROW(a.validate());
    REQUIRE(a.streams.size() == 3);
    CHECK(a.streams[2].label == "p2");

    auto silent = HawkesNetwork::with_uniform_impulse({"x", "y"}, {0.0, 0.0}, Matrix(2, 2, 0.3), basis);
    CHECK(simulate(silent, 1000, 3).total_events() == 0);
  }

  TEST_CASE("independent Poisson counts") {
    const auto net =
        HawkesNetwork::with_uniform_impulse({"x"}, {0.02}, Matrix(1, 1, 0.0), ImpulseBasis::boxcars());
    const auto sim = simulate_branching(net, 10'000, 9);
    CHECK(std::abs(double(sim.raw_counts[0]) - 200.0) <= 3 * std::sqrt(200.0));
    double lost = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const auto s = simulate_branching(net, 10'000, seed);
      lost += double(s.raw_counts[0] - s.events.streams[0].event_buckets.size());
    }
    CHECK(lost / 30 < 3.0);
  }

  TEST_CASE("simulated rates match the stationary solution") {
    const auto basis = ImpulseBasis::boxcars();
    const auto W = Matrix::from_rows({{0.3, 0.2}, {0.1, 0.4}});
    const std::vector<double> lambda0{0.01, 0.02};
    const auto net = HawkesNetwork::with_uniform_impulse({"x", "y"}, lambda0, W, basis);
    const auto rates = stationary_rates(W, lambda0);
    const std::size_t T = 100'000;
    const auto sim = simulate_branching(net, T, 31);
    for (std::size_t p = 0; p < 2; ++p) {
      const double empirical = double(sim.raw_counts[p]) / double(T);
      CHECK(std::abs(empirical - rates[p]) <= 0.1 * rates[p]);
    }
  }

  TEST_CASE("parent sampling") {
    const auto basis = ImpulseBasis::boxcars({1, 4});
    // g[1] = 0.5, so W * g[1] = 0.1 = lambda0.
    const auto net = HawkesNetwork::with_uniform_impulse({"x"}, {0.1}, Matrix::from_rows({{0.2}}), basis);
    const auto set = make_set(20, {{5, 6}});
    const EventIndex index(set, basis.dt_max);
    Rng rng(12);
    std::size_t background = 0;
    for (int i = 0; i < 10'000; ++i) {
      const auto pa = sample_parents(net, index, rng);
      CHECK(pa.parents[0] == ParentAssignment::kBackground);
      if (pa.parents[1] == ParentAssignment::kBackground)
        ++background;
      else
        CHECK(pa.parents[1] == 0);
    }
    CHECK(std::abs(double(background) / 10'000 - 0.5) <= 0.02);

    const auto far = make_set(20, {{0, 5}});
    const auto strong = HawkesNetwork::with_uniform_impulse({"x"}, {1e-6}, Matrix::from_rows({{0.9}}), basis);
    for (std::uint64_t seed = 0; seed < 200; ++seed)
      CHECK(sample_parents(strong, far, seed).background_count() == 2);

    Rng r2(3);
    const auto zero = HawkesNetwork::with_uniform_impulse(labels_for(3), {0.1, 0.1, 0.1}, Matrix(3, 3, 0.0), basis);
    const auto dense = random_process_set(r2, 3, 100, 0.5);
    const auto pa = sample_parents(zero, dense, 4);
    CHECK(pa.background_count() == dense.total_events());
  }

  TEST_CASE("conjugate updates") {
    const auto basis = ImpulseBasis::boxcars();
    GibbsConfig cfg;
    cfg.lambda0 = {2.0, 4.0};
    cfg.weight = {3.0, 2.0};
    const EdgeCoefficients uniform(4, std::vector<double>(3, 1.0 / 3));

    // No events: lambda0 ~ Gamma(2, 4 + T), W from the prior.
    const ParentAssignment none;
    const std::vector<std::size_t> no_events{0, 0};
    Rng rng(8);
    double l_sum = 0, w_sum = 0;
    const int draws = 10'000;
    for (int i = 0; i < draws; ++i) {
      const auto p = update_parameters(none, 2, 10, no_events, basis, cfg, uniform, rng);
      l_sum += p.lambda0[0];
      w_sum += p.weights(1, 0);
      for (const auto& c : p.impulse) CHECK(std::accumulate(c.begin(), c.end(), 0.0) == doctest::Approx(1.0));
    }
    CHECK(l_sum / draws == doctest::Approx(2.0 / 14.0).epsilon(0.02));
    CHECK(w_sum / draws == doctest::Approx(1.5).epsilon(0.02));

    // 100 events on a, 28 children on b assigned to them.
    ParentAssignment pa;
    for (std::size_t i = 0; i < 100; ++i) {
      pa.events.push_back({0, 2 * i});
      pa.parents.push_back(ParentAssignment::kBackground);
      if (i < 28) {
        pa.events.push_back({1, 2 * i + 1});
        pa.parents.push_back(static_cast<std::int64_t>(pa.events.size() - 2));
      }
    }
    GibbsConfig weak;
    const std::vector<std::size_t> counts{100, 28};
    double sum = 0, sum_back = 0;
    for (int i = 0; i < 4000; ++i) {
      const auto p = update_parameters(pa, 2, 300, counts, basis, weak, uniform, rng);
      sum += p.weights(0, 1);
      sum_back += p.weights(1, 0);
    }
    CHECK(sum / 4000 == doctest::Approx(29.0 / 101.0).epsilon(0.02));
    // No children on a from b: Gamma(1, 1 + 28).
    CHECK(sum_back / 4000 == doctest::Approx(1.0 / 29.0).epsilon(0.04));

    ParentAssignment bad = pa;
    bad.events[1].bucket = 200;
    CHECK_THROWS_AS(update_parameters(bad, 2, 300, counts, basis, weak, uniform, rng), Error);
  }

  TEST_CASE("gibbs config validation") {
    GibbsConfig c;
    CHECK_NOTHROW(c.validate());
    c.burn_in = c.iterations;
    CHECK_THROWS_AS(c.validate(), Error);
    c = GibbsConfig{};
    c.thinning = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = GibbsConfig{};
    c.weight.rate = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = GibbsConfig{};
    c.impulse_concentration = -1;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("fit keeps sweep invariants and is deterministic") {
    const auto net = three_process_truth();
    const auto set = simulate(net, 4000, 5);
    const auto basis = ImpulseBasis::boxcars();
    GibbsConfig cfg;
    cfg.iterations = 120;
    cfg.burn_in = 40;
    cfg.thinning = 2;
    cfg.seed = 99;
    std::size_t sweeps = 0;
    const auto summary = fit(set, basis, cfg, [&](const SweepState& s) {
      ++sweeps;
      std::size_t offspring = 0;
      for (std::size_t i = 0; i < s.assignment.parents.size(); ++i) {
        const auto p = s.assignment.parents[i];
        if (p == ParentAssignment::kBackground) continue;
        ++offspring;
        const auto& parent = s.assignment.events[static_cast<std::size_t>(p)];
        const auto& child = s.assignment.events[i];
        CHECK(parent.bucket < child.bucket);
        CHECK(child.bucket - parent.bucket <= basis.dt_max);
      }
      CHECK(s.assignment.background_count() + offspring == set.total_events());
      for (double w : s.parameters.weights.values()) CHECK(w >= 0.0);
      for (const auto& c : s.parameters.impulse) {
        const auto g = basis.kernel(c);
        CHECK(std::abs(std::accumulate(g.begin(), g.end(), 0.0) - 1.0) <= 1e-9);
      }
    });
    CHECK(sweeps == 120);
    CHECK(summary.n_samples == 40);
    CHECK(summary.labels == std::vector<std::string>{"p0", "p1", "p2"});
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) {
        CHECK(summary.ci90_lower(a, b) <= summary.mean_weights(a, b) + 1e-12);
        CHECK(summary.mean_weights(a, b) <= summary.ci90_upper(a, b) + 1e-12);
      }
    const auto again = fit(set, basis, cfg);
    CHECK(again.mean_weights == summary.mean_weights);
    CHECK(again.mean_lambda0 == summary.mean_lambda0);
    CHECK(again.ci90_upper == summary.ci90_upper);
    CHECK(again.mean_impulse == summary.mean_impulse);

    cfg.burn_in = cfg.iterations;
    CHECK_THROWS_AS(fit(set, basis, cfg), Error);
  }

  TEST_CASE("empty streams only receive background mass") {
    auto set = make_set(2000, {{}, {}});
    Rng rng(4);
    set.streams[0] = random_process_set(rng, 1, 2000, 0.02).streams[0];
    GibbsConfig cfg;
    cfg.iterations = 60;
    cfg.burn_in = 20;
    const auto summary = fit(set, ImpulseBasis::boxcars(), cfg);
    CHECK(summary.mean_lambda0[1] < 0.005);
    CHECK(summary.mean_weights(0, 1) < 0.05);
  }

  TEST_CASE("Gibbs posterior means match grid integration") {
    // One process and a single basis function, so the posterior over
    // (lambda0, w) is two-dimensional and can be integrated on a grid.
    const auto basis = ImpulseBasis::boxcars({4});
    const auto net = HawkesNetwork::with_uniform_impulse({"x"}, {0.03}, Matrix::from_rows({{0.4}}), basis);
    const std::size_t T = 3000;
    const auto set = simulate(net, T, 21);
    const auto& ev = set.streams[0].event_buckets;
    REQUIRE(ev.size() > 50);

    std::vector<double> excitation;  // sum of g over earlier events, per event
    double exposure = 0.0;           // kernel mass inside the grid
    for (std::size_t i = 0; i < ev.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < i; ++j)
        if (ev[i] - ev[j] <= 4) s += 0.25;
      excitation.push_back(s);
      exposure += 0.25 * double(std::min<std::size_t>(4, T - 1 - ev[i]));
    }
    double z = 0, mean_l = 0, mean_w = 0, peak = -1e300;
    std::vector<double> logp;
    const int n = 300;
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 1; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          const double l = 0.1 * i / n, w = 1.5 * j / n;
          double lp = -l - w - l * double(T) - w * exposure;
          for (double s : excitation) lp += std::log(l + w * s);
          if (pass == 0) {
            peak = std::max(peak, lp);
            continue;
          }
          const double p = std::exp(lp - peak);
          z += p;
          mean_l += p * l;
          mean_w += p * w;
        }
    mean_l /= z;
    mean_w /= z;

    GibbsConfig cfg;
    cfg.iterations = 20'000;
    cfg.burn_in = 1000;
    cfg.seed = 3;
    const auto summary = fit(set, basis, cfg);
    CHECK(summary.mean_weights(0, 0) == doctest::Approx(mean_w).epsilon(0.05));
    CHECK(summary.mean_lambda0[0] == doctest::Approx(mean_l).epsilon(0.05));
  }

  TEST_CASE("true parameters beat inflated weights in likelihood") {
    const auto net = three_process_truth();
    const auto set = simulate(net, 30'000, 17);
    auto inflated = net;
    for (double& w : inflated.weights.values()) w += 0.3;
    CHECK(log_likelihood(net, set).value > log_likelihood(inflated, set).value);
  }
}
