#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "excite/error.hpp"
#include "excite/topics.hpp"
#include "oracles.hpp"

using namespace excite;
using excite::testing::tv_distance;

namespace {

// K topics, each concentrated on its own block of V / K words.
Matrix block_topics(std::size_t K, std::size_t V, double leak = 0.05) {
  Matrix beta(K, V);
  const std::size_t block = V / K;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < V; ++v) beta(k, v) = leak / double(V);
    for (std::size_t v = k * block; v < (k + 1) * block; ++v) beta(k, v) += (1.0 - leak) / double(block);
  }
  return beta;
}

LdaConfig small_config(std::size_t K, std::uint64_t seed, std::size_t sweeps = 60) {
  auto c = LdaConfig::with_topics(K);
  c.sweeps = sweeps;
  c.burn_in = sweeps / 2;
  c.seed = seed;
  return c;
}

void check_simplex(std::span<const double> v) {
  double s = 0;
  for (double x : v) {
    CHECK(x >= 0.0);
    s += x;
  }
  CHECK(std::abs(s - 1.0) <= 1e-9);
}

Vocabulary vocab_of(std::vector<std::string> terms) {
  std::vector<std::size_t> df(terms.size(), 1);
  return Vocabulary(std::move(terms), std::move(df), 1);
}

}  // namespace

TEST_SUITE("topics") {
  TEST_CASE("config validation") {
    CHECK_NOTHROW(LdaConfig{}.validate());
    auto c = LdaConfig::with_topics(1);
    CHECK_THROWS_AS(c.validate(), Error);
    c = LdaConfig::with_topics(5);
    CHECK(c.alpha == doctest::Approx(10.0));
    c.burn_in = c.sweeps;
    CHECK_THROWS_AS(c.validate(), Error);
    c = LdaConfig{};
    c.eta = 0;
    CHECK_THROWS_AS(c.validate(), Error);
  }

  TEST_CASE("single-term vocabulary gives unit topic rows") {
    std::vector<BowDocument> docs{{"a", 1, "s", {{0, 3}}}, {"b", 2, "s", {{0, 5}}}};
    const auto fit = fit_lda(docs, 1, small_config(3, 1));
    for (std::size_t k = 0; k < 3; ++k) CHECK(fit.slice.beta(k, 0) == doctest::Approx(1.0));
  }

  TEST_CASE("input errors") {
    CHECK_THROWS_AS(fit_lda(std::vector<BowDocument>{}, 5, small_config(2, 1)), Error);
    std::vector<BowDocument> tiny{{"a", 1, "s", {{0, 1}}}};
    CHECK_THROWS_AS(fit_lda(tiny, 2, small_config(3, 1)), Error);
    std::vector<BowDocument> oov{{"a", 1, "s", {{7, 1}}}};
    CHECK_THROWS_AS(fit_lda(oov, 2, small_config(2, 1)), Error);
  }

  TEST_CASE("Gibbs sweeps conserve tokens and keep estimates on the simplex") {
    const auto docs = generate_lda_corpus(block_topics(4, 40), 80, 0.5, 30, 3);
    const std::size_t V = 40;
    std::vector<std::size_t> freq(V, 0);
    for (const auto& d : docs)
      for (const auto& tc : d.counts) freq[tc.term] += tc.count;
    auto cfg = small_config(4, 9, 20);
    CollapsedGibbsLda sampler(docs, V, cfg, Matrix(4, V, cfg.eta));
    for (int s = 0; s < 20; ++s) {
      sampler.sweep();
      for (std::size_t v = 0; v < V; ++v) {
        std::size_t total = 0;
        for (std::size_t k = 0; k < 4; ++k) total += sampler.topic_word_count(k, v);
        CHECK(total == freq[v]);
      }
      for (std::size_t d = 0; d < docs.size(); ++d) {
        std::size_t total = 0;
        for (std::size_t k = 0; k < 4; ++k) total += sampler.doc_topic_count(d, k);
        CHECK(total == docs[d].length());
      }
    }
    const auto beta = sampler.beta();
    for (std::size_t k = 0; k < 4; ++k) check_simplex(beta.row(k));
    for (std::size_t d = 0; d < docs.size(); ++d) check_simplex(sampler.theta(d));
  }

  TEST_CASE("equal seeds give bitwise-equal fits") {
    const auto docs = generate_lda_corpus(block_topics(3, 30), 100, 0.5, 20, 4);
    const auto a = fit_lda(docs, 30, small_config(3, 77));
    const auto b = fit_lda(docs, 30, small_config(3, 77));
    CHECK(a.slice.beta == b.slice.beta);
    for (std::size_t d = 0; d < docs.size(); ++d) CHECK(a.mixes[d].theta == b.mixes[d].theta);
    const auto c = fit_lda(docs, 30, small_config(3, 78));
    CHECK_FALSE(a.slice.beta == c.slice.beta);
  }

  TEST_CASE("generator produces nonempty documents near the mean length") {
    const auto docs = generate_lda_corpus(block_topics(3, 30), 500, 0.5, 40, 12);
    REQUIRE(docs.size() == 500);
    double total = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      CHECK_FALSE(docs[i].empty());
      CHECK(docs[i].timestamp == static_cast<std::int64_t>(i));
      total += double(docs[i].length());
    }
    CHECK(total / 500 == doctest::Approx(40).epsilon(0.05));
  }

  TEST_CASE("dynamic fit with kappa 0 equals independent per-slice fits") {
    auto docs = generate_lda_corpus(block_topics(3, 30), 150, 0.5, 25, 5);
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].timestamp = 1000 + static_cast<std::int64_t>(i) * 10;
    const auto cfg = small_config(3, 123);
    const auto dyn = fit_dynamic(docs, 30, 500, cfg, 0.0);
    REQUIRE(dyn.model.slices.size() == 3);
    CHECK(dyn.model.origin == 1000);
    for (std::size_t t = 0; t < 3; ++t) {
      std::vector<BowDocument> part(docs.begin() + static_cast<std::ptrdiff_t>(t * 50),
                                    docs.begin() + static_cast<std::ptrdiff_t>((t + 1) * 50));
      auto c = cfg;
      c.seed = slice_seed(cfg.seed, t);
      const auto ind = fit_lda(part, 30, c);
      CHECK(dyn.model.slices[t].beta == ind.slice.beta);
      CHECK(dyn.model.slices[t].slice_index == t);
      for (std::size_t i = 0; i < 50; ++i) CHECK(dyn.mixes[t * 50 + i].theta == ind.mixes[i].theta);
    }
  }

  TEST_CASE("single-slice corpus reduces to one LDA fit") {
    const auto docs = generate_lda_corpus(block_topics(3, 30), 60, 0.5, 25, 6);
    const auto cfg = small_config(3, 5);
    const auto dyn = fit_dynamic(docs, 30, 1'000'000, cfg, 3.0);
    REQUIRE(dyn.model.slices.size() == 1);
    auto c = cfg;
    c.seed = slice_seed(cfg.seed, 0);
    CHECK(dyn.model.slices[0].beta == fit_lda(docs, 30, c).slice.beta);
  }

  TEST_CASE("chained prior and empty slices") {
    const TopicModelSlice prev{0, Matrix::from_rows({{0.5, 0.5, 0.0, 0.0}, {0.25, 0.25, 0.25, 0.25}})};
    const auto prior = chained_word_prior(prev, 0.01, 2.0);
    CHECK(prior(0, 0) == doctest::Approx(0.01 + 2.0 * 0.5 * 4 * 0.01));
    CHECK(prior(0, 3) == doctest::Approx(0.01));
    CHECK(prior(1, 2) == doctest::Approx(0.01 + 2.0 * 0.25 * 4 * 0.01));

    auto docs = generate_lda_corpus(block_topics(2, 20), 40, 0.5, 20, 8);
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].timestamp = i < 20 ? 0 : 250;
    const auto dyn = fit_dynamic(docs, 20, 100, small_config(2, 3), 1.0);
    REQUIRE(dyn.model.slices.size() == 3);
    const auto expect = chained_word_prior(dyn.model.slices[0], 0.01, 1.0);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto row = expect.row(k);
      const double total = std::accumulate(row.begin(), row.end(), 0.0);
      for (std::size_t v = 0; v < 20; ++v) CHECK(dyn.model.slices[1].beta(k, v) == doctest::Approx(row[v] / total));
    }
  }

  TEST_CASE("chaining keeps topic indices aligned on a stable corpus") {
    const auto truth = block_topics(4, 40, 0.02);
    auto docs = generate_lda_corpus(truth, 600, 0.3, 40, 15);
    for (std::size_t i = 0; i < docs.size(); ++i) docs[i].timestamp = static_cast<std::int64_t>(i);
    auto cfg = small_config(4, 8, 80);
    cfg.alpha = 0.3;
    const auto dyn = fit_dynamic(docs, 40, 200, cfg, 1.0);
    REQUIRE(dyn.model.slices.size() == 3);
    for (std::size_t t = 1; t < 3; ++t)
      for (std::size_t k = 0; k < 4; ++k)
        CHECK(tv_distance(dyn.model.slices[t].beta.row(k), dyn.model.slices[t - 1].beta.row(k)) < 0.2);
  }

  TEST_CASE("mixture inference") {
    // Topic 2 is the only one giving mass to words 4 and 5.
    const TopicModelSlice slice{0, Matrix::from_rows({{0.5, 0.5, 0, 0, 0, 0},
                                                      {0, 0, 0.5, 0.5, 0, 0},
                                                      {0, 0, 0, 0, 0.5, 0.5}})};
    const BowDocument doc{"d", 0, "s", {{4, 30}, {5, 20}}};
    const auto mix = infer_mixture(doc, slice, 0.1, 200, 1);
    check_simplex(mix.theta);
    CHECK(std::max_element(mix.theta.begin(), mix.theta.end()) - mix.theta.begin() == 2);
    CHECK(mix.theta[2] > 0.9);
    CHECK(infer_mixture(doc, slice, 0.1, 200, 1).theta == mix.theta);

    const TopicModelSlice flat{0, Matrix(3, 4, 0.25)};
    const BowDocument long_doc{"d", 0, "s", {{0, 40}, {1, 40}, {2, 40}, {3, 40}}};
    const auto u = infer_mixture(long_doc, flat, 1.0, 400, 2);
    for (double x : u.theta) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(0.25));
    CHECK_THROWS_AS(infer_mixture(BowDocument{"e", 0, "s", {}}, slice, 0.1, 10, 1), Error);
  }

  TEST_CASE("top words rank by probability then spelling") {
    const TopicModelSlice s{0, Matrix::from_rows({{0.5, 0.3, 0.2}, {0.2, 0.4, 0.4}})};
    const auto v = vocab_of({"a", "b", "c"});
    const auto top = top_words(s, 0, 2, v);
    REQUIRE(top.size() == 2);
    CHECK(top[0].term == "a");
    CHECK(top[1].term == "b");
    CHECK(top_words(s, 0, 10, v).size() == 3);
    CHECK_THROWS_AS(top_words(s, 2, 1, v), Error);

    const TopicModelSlice tie{0, Matrix::from_rows({{0.4, 0.4, 0.2}})};
    const auto v2 = vocab_of({"big", "dip", "moon"});
    const auto t2 = top_words(tie, 0, 2, v2);
    CHECK(t2[0].term == "big");
    CHECK(t2[1].term == "dip");
  }

  TEST_CASE("occurrence threshold is strict and per topic") {
    const BucketGrid g{0, 900, 4};
    std::vector<DocTopicMix> mixes{
        {"a", 10, "s", {0.2, 0.8}}, {"b", 20, "s", {0.3, 0.7}}, {"c", 30, "s", {0.05, 0.95}},
        {"d", 1000, "s", {0.15, 0.85}}, {"e", 1001, "s", {0.1, 0.9}}, {"f", 2000, "s", {0.5, 0.5}}};
    const auto series = occurrence_series(mixes, 0.1, g);
    REQUIRE(series.size() == 2);
    CHECK(series[0].counts == std::vector<std::uint32_t>{2, 1, 1, 0});
    CHECK(series[1].counts == std::vector<std::uint32_t>{3, 2, 1, 0});
    CHECK(series[0].bucket_width == 900);
    mixes.push_back({"late", 5000, "s", {0.5, 0.5}});
    CHECK_THROWS_AS(occurrence_series(mixes, 0.1, g), Error);
    CHECK(occurrence_series(std::vector<DocTopicMix>{}, 0.1, g).empty());
  }

  TEST_CASE("topic report prints ten words per topic per slice") {
    std::vector<std::string> terms;
    for (int i = 0; i < 15; ++i) terms.push_back("w" + std::string(1, char('a' + i)));
    const auto vocab = vocab_of(terms);
    DynamicTopicModel model;
    model.vocab_size = 15;
    for (std::size_t t = 0; t < 2; ++t) model.slices.push_back({t, Matrix(3, 15, 1.0 / 15)});
    std::ostringstream out;
    write_topic_report(out, model, vocab);
    const auto text = out.str();
    std::istringstream in(text);
    std::string line;
    int headers = 0, words = 0;
    while (std::getline(in, line)) {
      if (line.rfind("slice ", 0) == 0) ++headers;
      else if (line.rfind("  ", 0) == 0) ++words;
    }
    CHECK(headers == 6);
    CHECK(words == 60);
    CHECK(text.find("slice 1 topic 2:\n  wa 0.066667\n") != std::string::npos);
  }

  TEST_CASE("held-out perplexity prefers the true topic count") {
    const std::size_t K = 6, V = 60;
    const auto truth = block_topics(K, V, 0.02);
    const auto train = generate_lda_corpus(truth, 600, 0.2, 60, 41);
    const auto test = generate_lda_corpus(truth, 150, 0.2, 60, 42);
    auto perplexity_for = [&](std::size_t k) {
      auto cfg = small_config(k, 5, 100);
      cfg.alpha = 0.2;
      const auto fit = fit_lda(train, V, cfg);
      return heldout_perplexity(test, fit.slice, cfg.alpha, 60, 9);
    };
    const double p_true = perplexity_for(K);
    const double p_low = perplexity_for(K / 3);
    const double p_high = perplexity_for(K * 3);
    MESSAGE("perplexity K=2: " << p_low << " K=6: " << p_true << " K=18: " << p_high);
    CHECK(p_true < p_low);
    CHECK(p_true < p_high);
  }
}
