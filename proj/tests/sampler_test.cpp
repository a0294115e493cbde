// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/sampler.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "test_util.hpp"

namespace nestedtm {
namespace {

ModelSpec make_spec(Variant v, std::size_t k) {
  ModelSpec s;
  s.variant = v;
  s.num_topics = k;
  return s;
}

/// A one-site, one-page state with hand-set counts. The page holds
/// `page_len` tokens as far as the page-topic row is concerned.
ModelState frozen_state(const ModelSpec& spec, std::size_t vocab) {
  ModelState s = empty_state(spec, 1, vocab);
  s.page_site = {0};
  s.z = {{}};
  s.counts.page_topic = Matrix<std::int32_t>(1, spec.topics_per_page());
  return s;
}

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Batch-means standard error of the mean.
double batch_se(const std::vector<double>& x, std::size_t batches = 50) {
  const std::size_t size = x.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    means.push_back(std::accumulate(x.begin() + b * size, x.begin() + (b + 1) * size, 0.0) /
                    static_cast<double>(size));
  }
  const double m = mean_of(means);
  double ss = 0.0;
  for (double v : means) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

// ---------------------------------------------------------------- tokens

TEST(TokenWeights, HandEvaluatedExample) {
  const auto spec = make_spec(Variant::kHaltLda, 1);
  auto s = frozen_state(spec, 4);
  s.c_alpha = 2.0;
  s.alpha_site(0, 0) = 0.5;
  s.alpha_site(0, 1) = 0.5;
  s.counts.page_topic(0, 0) = 2;
  s.counts.word_topic(1, 0) = 3;
  s.counts.topic_totals[0] = 10;
  std::vector<double> w(2);
  token_topic_weights(s, spec, 0, 1, w);
  EXPECT_NEAR(w[0], 3.0 * 3.05 / 10.2, 1e-12);
  EXPECT_NEAR(w[0], 0.8971, 5e-5);
  EXPECT_DOUBLE_EQ(w[1], 0.25);
}

TEST(TokenWeights, SymmetricStateGivesEqualWeights) {
  const auto spec = make_spec(Variant::kLda, 2);
  auto s = frozen_state(spec, 3);
  s.counts.page_topic(0, 0) = s.counts.page_topic(0, 1) = 4;
  s.counts.word_topic(2, 0) = s.counts.word_topic(2, 1) = 5;
  s.counts.topic_totals = {7, 7};
  std::vector<double> w(2);
  token_topic_weights(s, spec, 0, 2, w);
  EXPECT_DOUBLE_EQ(w[0], w[1]);
}

TEST(TokenWeights, ZeroLocalWeightReducesToLda) {
  const auto lda_spec = make_spec(Variant::kLda, 3);
  const auto halt_spec = make_spec(Variant::kHaltLda, 3);
  auto lda = frozen_state(lda_spec, 5);
  auto halt = frozen_state(halt_spec, 5);
  const std::vector<double> alpha = {0.2, 0.5, 0.3};
  lda.c_alpha = halt.c_alpha = 1.7;
  lda.alpha_flat = alpha;
  for (std::size_t k = 0; k < 3; ++k) halt.alpha_site(0, k) = alpha[k];
  halt.alpha_site(0, 3) = 0.0;
  const std::vector<std::int32_t> m = {1, 4, 2};
  for (std::size_t k = 0; k < 3; ++k) {
    lda.counts.page_topic(0, k) = halt.counts.page_topic(0, k) = m[k];
    for (WordId v = 0; v < 5; ++v) {
      lda.counts.word_topic(v, k) = halt.counts.word_topic(v, k) =
          static_cast<std::int32_t>(k + 2 * v);
    }
    lda.counts.topic_totals[k] = halt.counts.topic_totals[k] =
        static_cast<std::int64_t>(5 * k + 20);
  }
  halt.counts.site_local(0, 2) = 6;
  halt.counts.local_totals[0] = 6;
  for (WordId v = 0; v < 5; ++v) {
    std::vector<double> a(3), b(4);
    token_topic_weights(lda, lda_spec, 0, v, a);
    token_topic_weights(halt, halt_spec, 0, v, b);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a[k], b[k]);
    EXPECT_EQ(b[3], 0.0);
  }
}

TEST(SampleTokenTopic, FrequenciesMatchWeights) {
  const auto spec = make_spec(Variant::kHaltLda, 2);
  NestedCorpus corpus(Vocabulary({"a", "b", "c"}), {Site{"s", {Page{"p", {0, 1, 2, 1}}}}});
  auto s = init_state(spec, corpus, 1);
  s.alpha_site(0, 0) = 0.5;
  s.alpha_site(0, 1) = 0.2;
  s.alpha_site(0, 2) = 0.3;
  s.c_alpha = 1.3;

  // Weights for position 1 with that token removed.
  auto probe = s;
  const TopicId old = probe.z[0][1];
  --probe.counts.page_topic(0, old);
  if (old < 2) {
    --probe.counts.word_topic(1, old);
    --probe.counts.topic_totals[old];
  } else {
    --probe.counts.site_local(0, 1);
    --probe.counts.local_totals[0];
  }
  std::vector<double> w(3);
  token_topic_weights(probe, spec, 0, 1, w);
  const double total = w[0] + w[1] + w[2];

  Rng rng(42);
  constexpr int kDraws = 100000;
  std::vector<int> hits(3, 0);
  for (int t = 0; t < kDraws; ++t) {
    auto copy = s;
    ++hits[sample_token_topic(copy, spec, corpus, 0, 1, rng)];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double p = w[k] / total;
    const double se = std::sqrt(p * (1 - p) / kDraws);
    EXPECT_NEAR(hits[k] / double(kDraws), p, 3 * se) << "topic " << k;
  }
}

class SweepKernel : public ::testing::TestWithParam<Variant> {};

TEST_P(SweepKernel, MatchesPerTokenPath) {
  const auto spec = make_spec(GetParam(), 4);
  const auto corpus = testing::random_corpus(3, 4, 25, 30, 7);
  auto fast = init_state(spec, corpus, 5);
  if (fast.hierarchical()) {
    Rng a(3);
    for (std::size_t i = 0; i < fast.num_sites; ++i) {
      std::vector<double> ones(fast.topics_per_page(), 1.0);
      sample_dirichlet(ones, fast.alpha_site.row(i), a);
    }
  }
  fast.c_alpha = 2.5;
  auto slow = fast;
  Rng r1(99), r2(99);
  for (int pass = 0; pass < 3; ++pass) {
    sweep_tokens(fast, spec, corpus, r1);
    for (std::size_t d = 0; d < corpus.num_pages(); ++d) {
      for (std::size_t h = 0; h < corpus.page(d).tokens.size(); ++h) {
        sample_token_topic(slow, spec, corpus, d, h, r2);
      }
    }
    ASSERT_EQ(fast.z, slow.z);
    ASSERT_EQ(fast.counts, slow.counts);
    ASSERT_EQ(fast.counts, recount(corpus, fast.z, spec));
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, SweepKernel,
                         ::testing::Values(Variant::kLda, Variant::kLtLda,
                                           Variant::kHaLda, Variant::kHaltLda));

// ----------------------------------------------------------- table counts

/// Unsigned Stirling numbers of the first kind by the standard recurrence.
std::vector<std::vector<double>> stirling_table(int max_m) {
  std::vector<std::vector<double>> s(max_m + 1, std::vector<double>(max_m + 1, 0.0));
  s[0][0] = 1.0;
  for (int m = 1; m <= max_m; ++m) {
    for (int k = 1; k <= m; ++k) s[m][k] = s[m - 1][k - 1] + (m - 1) * s[m - 1][k];
  }
  return s;
}

TEST(TableCount, Degenerate) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    EXPECT_EQ(sample_table_count(0, 0.7, rng), 0);
    EXPECT_EQ(sample_table_count(1, 0.7, rng), 1);
  }
}

TEST(TableCount, TwoCustomersUnitMass) {
  Rng rng(2);
  double sum = 0.0;
  constexpr int kDraws = 100000;
  for (int t = 0; t < kDraws; ++t) sum += sample_table_count(2, 1.0, rng);
  EXPECT_NEAR(sum / kDraws, 1.5, 0.01);
}

TEST(TableCount, ChiSquareAgainstStirlingDensity) {
  const auto s = stirling_table(6);
  Rng rng(3);
  constexpr int kDraws = 100000;
  for (int m = 1; m <= 6; ++m) {
    for (double mass : {0.5, 1.0, 2.0}) {
      std::vector<double> p(m + 1, 0.0);
      const double log_norm = std::lgamma(mass) - std::lgamma(mass + m);
      for (int l = 1; l <= m; ++l) {
        p[l] = s[m][l] * std::exp(l * std::log(mass) + log_norm);
      }
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
      std::vector<int> hits(m + 1, 0);
      for (int t = 0; t < kDraws; ++t) ++hits[sample_table_count(m, mass, rng)];
      EXPECT_EQ(hits[0], 0);
      double chi2 = 0.0;
      for (int l = 1; l <= m; ++l) {
        const double expected = p[l] * kDraws;
        chi2 += (hits[l] - expected) * (hits[l] - expected) / expected;
      }
      if (m == 1) continue;
      boost::math::chi_squared dist(m - 1);
      EXPECT_LT(chi2, boost::math::quantile(dist, 0.99)) << "m=" << m << " mass=" << mass;
    }
  }
}

// ------------------------------------------------------------------ alpha

TEST(SiteAlpha, PriorOnlyMeans) {
  const auto spec = make_spec(Variant::kHaltLda, 4);
  auto s = empty_state(spec, 1, 3);
  Matrix<std::int64_t> tables(1, 5);
  Rng rng(4);
  std::vector<double> sum(5, 0.0);
  constexpr int kDraws = 40000;
  for (int t = 0; t < kDraws; ++t) {
    sample_site_alpha(s, tables, 0, rng);
    auto row = s.alpha_site.row(0);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    for (std::size_t k = 0; k < 5; ++k) sum[k] += row[k];
  }
  for (double x : sum) EXPECT_NEAR(x / kDraws, 0.2, 0.005);
}

TEST(SiteAlpha, ConcentratesOnLargeTableSum) {
  const std::size_t k = 9;
  const auto spec = make_spec(Variant::kHaltLda, k);
  auto s = empty_state(spec, 2, 3);
  Matrix<std::int64_t> tables(2, k + 1);
  tables(1, 3) = 1000;
  Rng rng(5);
  double sum = 0.0;
  constexpr int kDraws = 20000;
  for (int t = 0; t < kDraws; ++t) {
    sample_site_alpha(s, tables, 1, rng);
    sum += s.alpha_site(1, 3);
  }
  const double exact = 1001.0 / (1001.0 + k);
  EXPECT_NEAR(sum / kDraws, exact, 3e-4);
  EXPECT_NEAR(exact, 1000.0 / (1000.0 + k + 1), 2e-3);
  for (double a : s.alpha_site.row(0)) EXPECT_DOUBLE_EQ(a, 0.1);
}

TEST(FlatAlpha, PriorAndSymmetry) {
  const auto spec = make_spec(Variant::kLtLda, 3);
  auto s = empty_state(spec, 3, 3);
  Matrix<std::int64_t> none(3, 4);
  Matrix<std::int64_t> equal(3, 4, 5);
  Rng rng(6);
  std::vector<double> prior(4, 0.0), sym(4, 0.0);
  constexpr int kDraws = 40000;
  for (int t = 0; t < kDraws; ++t) {
    sample_flat_alpha(s, spec, none, rng);
    for (std::size_t k = 0; k < 4; ++k) prior[k] += s.alpha_flat[k];
    sample_flat_alpha(s, spec, equal, rng);
    EXPECT_NEAR(std::accumulate(s.alpha_flat.begin(), s.alpha_flat.end(), 0.0), 1.0, 1e-12);
    for (std::size_t k = 0; k < 4; ++k) sym[k] += s.alpha_flat[k];
  }
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(prior[k] / kDraws, 0.25, 0.01);
    EXPECT_NEAR(sym[k] / kDraws, 0.25, 0.005);
  }
}

TEST(FlatAlpha, DominantTopicRecovered) {
  // Three well-separated topics over disjoint word blocks; pages favour
  // topic 0.
  constexpr std::size_t kTopics = 3, kBlock = 10;
  Rng gen(11);
  const std::vector<double> alpha = {0.8, 0.1, 0.1};
  std::vector<std::string> words;
  for (std::size_t v = 0; v < kTopics * kBlock; ++v) words.push_back("w" + std::to_string(v));
  std::vector<Site> sites;
  for (int i = 0; i < 2; ++i) {
    Site site{"s" + std::to_string(i), {}};
    for (int j = 0; j < 25; ++j) {
      std::vector<double> params(kTopics), theta(kTopics);
      for (std::size_t k = 0; k < kTopics; ++k) params[k] = 2.0 * alpha[k];
      sample_dirichlet(params, theta, gen);
      Page page{"p" + std::to_string(j), {}};
      for (int h = 0; h < 40; ++h) {
        const auto k = sample_categorical(theta, gen);
        page.tokens.push_back(static_cast<WordId>(k * kBlock + gen() % kBlock));
      }
      site.pages.push_back(std::move(page));
    }
    sites.push_back(std::move(site));
  }
  const NestedCorpus corpus(Vocabulary(words), std::move(sites));
  ChainConfig config{300, 200, 1, 0.3, {false, false, false}};
  const auto summary = run_chain(make_spec(Variant::kLda, kTopics), corpus, config, 8);
  // Learned topic whose mass sits on block 0.
  std::size_t match = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < kTopics; ++k) {
    double mass = 0.0;
    for (std::size_t v = 0; v < kBlock; ++v) mass += summary.phi_mean(k, v);
    if (mass > best) best = mass, match = k;
  }
  for (std::size_t k = 0; k < kTopics; ++k) {
    if (k != match) EXPECT_GT(summary.alpha_mean(0, match), summary.alpha_mean(0, k));
  }
}

// --------------------------------------------------------------------- MH

TEST(MhCAlpha, EmptyCorpusRecoversPrior) {
  const auto spec = make_spec(Variant::kHaLda, 3);
  auto s = empty_state(spec, 0, 2);
  Rng rng(12);
  std::vector<double> kept;
  for (int t = 0; t < 1000000; ++t) {
    mh_update_c_alpha(s, spec, rng);
    if (t % 10 == 9) kept.push_back(s.c_alpha);
  }
  EXPECT_EQ(kept.size(), 100000u);
  EXPECT_NEAR(mean_of(kept), 1.0, 0.02);
}

TEST(MhCAlpha, TinyStepAlwaysAccepts) {
  const auto spec = make_spec(Variant::kLda, 2);
  const auto corpus = testing::random_corpus(2, 3, 10, 5, 1);
  auto s = init_state(spec, corpus, 2);
  Rng rng(13);
  int accepted = 0;
  for (int t = 0; t < 1000; ++t) accepted += mh_update_c_alpha(s, spec, rng, 1e-7);
  EXPECT_GE(accepted, 995);
}

/// Distribution function of exp(target) on a fine grid in log space.
struct GridCdf {
  std::vector<double> x, cdf;
  template <typename Target>
  GridCdf(Target&& log_target, double lo, double hi, int n) {
    const double dl = (std::log(hi) - std::log(lo)) / n;
    std::vector<double> logw;
    for (int i = 0; i <= n; ++i) {
      const double v = std::exp(std::log(lo) + i * dl);
      x.push_back(v);
      logw.push_back(log_target(v) + std::log(v));  // Jacobian of the log grid
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    double run = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      run += std::exp(logw[i] - mx);
      cdf.push_back(run);
    }
    for (double& c : cdf) c /= run;
  }
  double at(double v) const {
    auto it = std::upper_bound(x.begin(), x.end(), v);
    if (it == x.begin()) return 0.0;
    return cdf[static_cast<std::size_t>(it - x.begin()) - 1];
  }
};

double max_cdf_gap(const GridCdf& grid, std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  double gap = 0.0;
  for (double q : {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95}) {
    const double v = draws[static_cast<std::size_t>(q * (draws.size() - 1))];
    gap = std::max(gap, std::abs(grid.at(v) - q));
  }
  return gap;
}

TEST(MhCAlpha, MatchesGridQuadrature) {
  const auto spec = make_spec(Variant::kLda, 2);
  NestedCorpus corpus(Vocabulary({"a", "b"}),
                      {Site{"s", {Page{"p", {0, 0, 1, 1}}, Page{"q", {0, 1, 1}}}}});
  auto s = init_state(spec, corpus, 3);
  s.z = {{0, 0, 0, 1}, {1, 1, 0}};
  s.counts = recount(corpus, s.z, spec);
  s.alpha_flat = {0.7, 0.3};
  const GridCdf grid([&](double c) { return log_c_alpha_target(s, spec, c); }, 1e-4,
                     60.0, 20000);
  Rng rng(14);
  std::vector<double> draws;
  for (int t = 0; t < 400000; ++t) {
    mh_update_c_alpha(s, spec, rng);
    if (t >= 1000 && t % 4 == 0) draws.push_back(s.c_alpha);
  }
  EXPECT_LT(max_cdf_gap(grid, draws), 0.02);
}

TEST(MhBase, NoSitesRecoversPrior) {
  const auto spec = make_spec(Variant::kHaltLda, 2);
  auto s = empty_state(spec, 0, 2);
  Rng rng(15);
  std::vector<double> kept;
  for (int t = 0; t < 1000000; ++t) {
    mh_update_base(s, spec, 1, rng);
    if (t % 10 == 9) kept.push_back(s.base[1]);
  }
  EXPECT_NEAR(mean_of(kept), 1.0, 0.02);
}

TEST(MhBase, ConcentratedAlphaPushesComponentUp) {
  const auto spec = make_spec(Variant::kHaLda, 3);
  auto s = empty_state(spec, 5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    s.alpha_site(i, 0) = 0.9;
    s.alpha_site(i, 1) = 0.05;
    s.alpha_site(i, 2) = 0.05;
  }
  Rng rng(16);
  std::vector<double> kept;
  for (int t = 0; t < 200000; ++t) {
    mh_update_base(s, spec, 0, rng);
    if (t >= 1000) kept.push_back(s.base[0]);
  }
  EXPECT_GT(mean_of(kept), 1.0 + 3 * batch_se(kept));
}

TEST(MhBase, MatchesGridQuadrature) {
  const auto spec = make_spec(Variant::kHaLda, 2);
  auto s = empty_state(spec, 2, 2);
  s.alpha_site(0, 0) = 0.6;
  s.alpha_site(0, 1) = 0.4;
  s.alpha_site(1, 0) = 0.3;
  s.alpha_site(1, 1) = 0.7;
  s.base = {1.0, 1.5};
  const GridCdf grid([&](double b) { return log_base_target(s, spec, 0, b); }, 1e-4,
                     60.0, 20000);
  Rng rng(17);
  std::vector<double> draws;
  for (int t = 0; t < 400000; ++t) {
    mh_update_base(s, spec, 0, rng);
    if (t >= 1000 && t % 4 == 0) draws.push_back(s.base[0]);
  }
  EXPECT_LT(max_cdf_gap(grid, draws), 0.02);
}

// ------------------------------------------------------ conditional means

TEST(ConditionalMeans, Examples) {
  {
    const auto spec = make_spec(Variant::kLda, 1);
    auto s = frozen_state(spec, 4);
    const auto m = conditional_means(s, spec);
    for (std::size_t v = 0; v < 4; ++v) EXPECT_DOUBLE_EQ(m.phi(0, v), 0.25);
  }
  {
    const auto spec = make_spec(Variant::kLda, 1);
    auto s = frozen_state(spec, 2);
    s.counts.word_topic(0, 0) = 10;
    s.counts.topic_totals[0] = 10;
    const auto m = conditional_means(s, spec);
    EXPECT_NEAR(m.phi(0, 0), 10.05 / 10.10, 1e-15);
    EXPECT_NEAR(m.phi(0, 0), 0.99505, 1e-5);
  }
  {
    const auto spec = make_spec(Variant::kHaltLda, 1);
    auto s = frozen_state(spec, 2);
    s.c_alpha = 2.0;
    s.counts.page_topic(0, 0) = 4;
    const auto m = conditional_means(s, spec);
    EXPECT_NEAR(m.theta(0, 0), 5.0 / 6.0, 1e-15);
    EXPECT_NEAR(m.theta(0, 1), 1.0 / 6.0, 1e-15);
    EXPECT_DOUBLE_EQ(m.psi(0, 1), 0.5);
  }
}

// ------------------------------------------------------------------ chain

class ChainInvariants : public ::testing::TestWithParam<Variant> {};

TEST_P(ChainInvariants, CountsAndSimplicesAfterEverySweep) {
  const auto spec = make_spec(GetParam(), 3);
  const auto corpus = testing::random_corpus(3, 5, 20, 15, 21);
  auto s = init_state(spec, corpus, 22);
  Rng rng(23);
  for (int t = 0; t < 60; ++t) {
    sweep(s, spec, corpus, rng);
    ASSERT_EQ(recount(corpus, s.z, spec), s.counts);
    for (std::size_t i = 0; i < (s.hierarchical() ? s.num_sites : 1); ++i) {
      auto a = s.alpha_for_site(i);
      ASSERT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 1.0, 1e-10);
    }
    const auto m = conditional_means(s, spec);
    for (const auto* mat : {&m.phi, &m.psi, &m.theta}) {
      for (std::size_t r = 0; r < mat->rows(); ++r) {
        auto row = mat->row(r);
        ASSERT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-10);
      }
    }
    ASSERT_TRUE(std::isfinite(log_joint(s, spec)));
  }
}

INSTANTIATE_TEST_SUITE_P(AllVariants, ChainInvariants,
                         ::testing::Values(Variant::kLda, Variant::kLtLda,
                                           Variant::kHaLda, Variant::kHaltLda));

TEST(RunChain, DefaultLengthsSaveFiveHundred) {
  const auto corpus = testing::random_corpus(2, 2, 5, 4, 1);
  ChainConfig config;
  config.traces = {false, false, false};
  const auto summary = run_chain(make_spec(Variant::kHaltLda, 2), corpus, config, 2);
  EXPECT_EQ(summary.saved, 500u);
  EXPECT_EQ(summary.c_alpha_trace.size(), 500u);
  config.iterations = 2500;
  Chain chain(make_spec(Variant::kHaltLda, 2), corpus, config, 2);
  chain.run();
  EXPECT_EQ(chain.summary().saved, 1000u);
  EXPECT_EQ(recount(corpus, chain.state().z, chain.spec()), chain.state().counts);
}

TEST(RunChain, RejectsBadLengths) {
  const auto corpus = testing::random_corpus(1, 2, 5, 4, 1);
  EXPECT_THROW(run_chain(make_spec(Variant::kLda, 2), corpus, {10, 10, 1}, 1),
               std::invalid_argument);
  EXPECT_THROW(run_chain(make_spec(Variant::kLda, 2), corpus, {10, 5, 0}, 1),
               std::invalid_argument);
}

TEST(RunChain, DeterministicAndResumable) {
  const auto corpus = testing::random_corpus(2, 3, 12, 8, 4);
  const auto spec = make_spec(Variant::kHaltLda, 3);
  ChainConfig config{40, 20, 2, 0.3, {}};
  const auto a = run_chain(spec, corpus, config, 9);
  const auto b = run_chain(spec, corpus, config, 9);
  EXPECT_EQ(a.theta_mean, b.theta_mean);
  EXPECT_EQ(a.c_alpha_trace, b.c_alpha_trace);
  EXPECT_EQ(a.saved, 10u);

  Chain first(spec, corpus, config, 9);
  for (int t = 0; t < 25; ++t) first.step();
  Chain resumed(corpus, first.snapshot());
  resumed.run();
  EXPECT_EQ(resumed.summary().theta_mean, a.theta_mean);
  EXPECT_EQ(resumed.summary().phi_trace, a.phi_trace);
  EXPECT_EQ(resumed.summary().c_alpha_trace, a.c_alpha_trace);
}

// ---------------------------------------------------------------- Geweke

TEST(Geweke, HyperparameterPriorsAreInvariant) {
  // Successive-conditional simulator: a full sweep given the words, then
  // fresh words given the assignments (topic-word rows redrawn from their
  // priors, which the collapsed state does not hold).
  const auto spec = make_spec(Variant::kHaltLda, 2);
  const std::size_t vocab = 3;
  auto corpus = testing::random_corpus(2, 2, 3, vocab, 30);
  Rng rng(31);

  // Exact prior draw to start.
  auto s = init_state(spec, corpus, 32);
  s.c_alpha = sample_gamma(1.0, rng);
  for (double& b : s.base) b = sample_gamma(1.0, rng);
  for (std::size_t i = 0; i < s.num_sites; ++i) sample_dirichlet(s.base, s.alpha_site.row(i), rng);

  auto regenerate_words = [&]() {
    std::vector<double> ones_beta(vocab, spec.beta), ones_gamma(vocab, spec.gamma);
    Matrix<double> phi(spec.num_topics, vocab), psi(s.num_sites, vocab);
    for (std::size_t k = 0; k < spec.num_topics; ++k) sample_dirichlet(ones_beta, phi.row(k), rng);
    for (std::size_t i = 0; i < s.num_sites; ++i) sample_dirichlet(ones_gamma, psi.row(i), rng);
    std::vector<Site> sites(corpus.sites().begin(), corpus.sites().end());
    std::size_t d = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      for (auto& page : sites[i].pages) {
        for (std::size_t h = 0; h < page.tokens.size(); ++h) {
          const TopicId k = s.z[d][h];
          page.tokens[h] = static_cast<WordId>(
              k < spec.num_topics ? sample_categorical(phi.row(k), rng)
                                  : sample_categorical(psi.row(i), rng));
        }
        ++d;
      }
    }
    corpus = NestedCorpus(corpus.vocabulary(), std::move(sites));
    s.counts = recount(corpus, s.z, spec);
  };

  std::vector<double> c_draws, b_draws;
  for (int t = 0; t < 200000; ++t) {
    sweep(s, spec, corpus, rng);
    regenerate_words();
    if (t >= 1000) {
      c_draws.push_back(s.c_alpha);
      b_draws.push_back(s.base[0]);
    }
  }
  EXPECT_NEAR(mean_of(c_draws), 1.0, 3 * batch_se(c_draws));
  EXPECT_NEAR(mean_of(b_draws), 1.0, 3 * batch_se(b_draws));
}

}  // namespace
}  // namespace nestedtm
