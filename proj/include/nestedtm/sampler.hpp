// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "nestedtm/corpus.hpp"
#include "nestedtm/matrix.hpp"
#include "nestedtm/model.hpp"
#include "nestedtm/random.hpp"

namespace nestedtm {

/// Unnormalized conditional weights for a token of word `w` on flat page
/// `page`. Counts in `state` must already exclude the token. `out` has
/// topics_per_page() entries.
void token_topic_weights(const ModelState& state, const ModelSpec& spec,
                         std::size_t page, WordId w, std::span<double> out);

/// Removes token (page, h) from the counts, draws its topic from the
/// conditional and adds it back. Returns the new topic.
TopicId sample_token_topic(ModelState& state, const ModelSpec& spec,
                           const NestedCorpus& corpus, std::size_t page,
                           std::size_t h, Rng& rng);

/// One pass of sample_token_topic over every token in corpus order, with the
/// per-topic denominators cached. Consumes the RNG exactly like calling
/// sample_token_topic token by token and produces the same draws.
void sweep_tokens(ModelState& state, const ModelSpec& spec,
                  const NestedCorpus& corpus, Rng& rng);

/// Antoniak table count for `m` customers at concentration `mass`:
/// sum over t = 1..m of Bernoulli(mass / (mass + t - 1)).
std::int32_t sample_table_count(std::int32_t m, double mass, Rng& rng);

/// Draws lambda for every page and topic and sums them per site:
/// returns a (num_sites x topics_per_page) matrix.
Matrix<std::int64_t> draw_table_counts(const ModelState& state, Rng& rng);

/// alpha_i ~ Dirichlet(base + table sums of site i).
void sample_site_alpha(ModelState& state, const Matrix<std::int64_t>& tables,
                       std::size_t site, Rng& rng);

/// alpha ~ Dirichlet(mass + table sums pooled over all sites).
void sample_flat_alpha(ModelState& state, const ModelSpec& spec,
                       const Matrix<std::int64_t>& tables, Rng& rng);

/// Log target for c_alpha up to a constant: Gamma(a, b) prior times the
/// collapsed page-topic likelihood.
double log_c_alpha_target(const ModelState& state, const ModelSpec& spec,
                          double c_alpha);

/// Log target for component k of c0 * alpha0 up to a constant: Gamma prior
/// times the Dirichlet densities of every alpha_i.
double log_base_target(const ModelState& state, const ModelSpec& spec,
                       std::size_t k, double value);

/// Log-normal random-walk Metropolis-Hastings steps. Return whether the
/// proposal was accepted; a non-finite target at the proposal is rejected.
bool mh_update_c_alpha(ModelState& state, const ModelSpec& spec, Rng& rng,
                       double step = 0.3);
bool mh_update_base(ModelState& state, const ModelSpec& spec, std::size_t k,
                    Rng& rng, double step = 0.3);

ConditionalMeans conditional_means(const ModelState& state,
                                   const ModelSpec& spec);

/// Log joint density of words, assignments and hyperparameters, used for
/// progress reporting.
double log_joint(const ModelState& state, const ModelSpec& spec);

struct SweepStats {
  bool c_alpha_accepted = false;
  std::size_t base_accepted = 0;
};

/// tokens, table counts, alpha, c_alpha, then each c0 * alpha0_k.
SweepStats sweep(ModelState& state, const ModelSpec& spec,
                 const NestedCorpus& corpus, Rng& rng, double mh_step = 0.3);

struct ChainConfig {
  std::size_t iterations = 2000;
  std::size_t burnin = 1500;
  std::size_t thin = 1;
  double mh_step = 0.3;
  TraceOptions traces;

  /// Throws std::invalid_argument unless iterations > burnin and thin >= 1.
  void validate() const;
  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

/// Everything needed to continue a chain bit-for-bit.
struct ChainSnapshot {
  ModelSpec spec;
  ChainConfig config;
  std::uint64_t seed = 0;
  std::size_t sweeps_done = 0;
  std::size_t c_alpha_accepted = 0;
  std::size_t base_accepted = 0;
  std::string rng_state;
  ModelState state;
  PosteriorSummary summary;
};

class Chain {
 public:
  Chain(const ModelSpec& spec, const NestedCorpus& corpus, ChainConfig config,
        std::uint64_t seed);
  /// Continues from a snapshot taken on the same corpus.
  Chain(const NestedCorpus& corpus, ChainSnapshot snapshot);

  /// One sweep, recording the conditional means if the sweep is saved.
  SweepStats step();
  bool finished() const { return sweeps_done_ >= config_.iterations; }

  using Observer = std::function<void(const Chain&, const SweepStats&)>;
  /// Steps until finished, calling `observer` after each sweep.
  const PosteriorSummary& run(const Observer& observer = {});

  std::size_t sweeps_done() const { return sweeps_done_; }
  const ModelSpec& spec() const { return spec_; }
  const ChainConfig& config() const { return config_; }
  const ModelState& state() const { return state_; }
  const PosteriorSummary& summary() const { return summary_; }
  PosteriorSummary take_summary() { return std::move(summary_); }
  double c_alpha_acceptance() const;
  double base_acceptance() const;

  ChainSnapshot snapshot() const;

 private:
  const NestedCorpus* corpus_;
  ModelSpec spec_;
  ChainConfig config_;
  std::uint64_t seed_;
  Rng rng_;
  ModelState state_;
  PosteriorSummary summary_;
  std::size_t sweeps_done_ = 0;
  std::size_t c_alpha_accepted_ = 0;
  std::size_t base_accepted_ = 0;
};

PosteriorSummary run_chain(const ModelSpec& spec, const NestedCorpus& corpus,
                           const ChainConfig& config, std::uint64_t seed);

}  // namespace nestedtm
