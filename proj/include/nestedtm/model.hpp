// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nestedtm/corpus.hpp"
#include "nestedtm/matrix.hpp"

namespace nestedtm {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The four page-topic priors:
///   LDA       single asymmetric alpha shared by every page, no local topics
///   LT-LDA    LDA plus one local topic per site
///   HA-LDA    per-site alpha_i drawn around a global base measure
///   HALT-LDA  HA-LDA plus one local topic per site
enum class Variant { kLda, kLtLda, kHaLda, kHaltLda };

std::string_view variant_name(Variant v);
/// Accepts lda, lt, ha, halt (and the -lda suffixed forms), case-insensitive.
Variant parse_variant(std::string_view name);

constexpr bool has_local_topics(Variant v) {
  return v == Variant::kLtLda || v == Variant::kHaltLda;
}
constexpr bool is_hierarchical(Variant v) {
  return v == Variant::kHaLda || v == Variant::kHaltLda;
}

struct ModelSpec {
  Variant variant = Variant::kHaltLda;
  std::size_t num_topics = 10;  // K global topics
  double a_alpha = 1.0;         // Gamma shape on c_alpha
  double b_alpha = 1.0;         // Gamma rate on c_alpha
  double beta = 0.05;           // c_beta * beta_v, identical for every word
  double gamma = 0.05;          // c_gamma * gamma_v
  double base_shape = 1.0;      // Gamma prior on each c0 * alpha0_k
  double base_rate = 1.0;
  /// Symmetric Dirichlet mass on the flat alpha; defaults to 1/K*.
  std::optional<double> flat_alpha_mass;

  /// L_i: 1 for local-topic variants, else 0. Every site has the same count.
  std::size_t local_topics() const { return has_local_topics(variant) ? 1 : 0; }
  /// K* = K + L_i, the page-topic dimension.
  std::size_t topics_per_page() const { return num_topics + local_topics(); }
  double flat_prior_mass() const {
    return flat_alpha_mass.value_or(1.0 / static_cast<double>(topics_per_page()));
  }

  /// Throws std::invalid_argument on K = 0 or a non-positive scale.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

using TopicId = std::uint32_t;

/// Sufficient statistics of Z.
struct CountTables {
  /// n_{k,v}, stored word-major (V x K) so the K counts for one word are
  /// contiguous in the token kernel.
  Matrix<std::int32_t> word_topic;
  std::vector<std::int64_t> topic_totals;  // sum_v n_{k,v}
  /// p_{i,v}: site x V, zero rows when the variant has no local topics.
  Matrix<std::int32_t> site_local;
  std::vector<std::int64_t> local_totals;  // sum_v p_{i,v}
  /// m_{ij,k}: flat page x (K + L).
  Matrix<std::int32_t> page_topic;

  std::int32_t global(std::size_t k, WordId v) const { return word_topic(v, k); }

  friend bool operator==(const CountTables&, const CountTables&) = default;
};

struct ModelState {
  std::size_t num_topics = 0;
  std::size_t local_topics = 0;
  std::size_t vocab_size = 0;
  std::size_t num_sites = 0;
  std::vector<std::size_t> page_site;  // site of each flat page
  std::vector<std::vector<TopicId>> z;  // topic per token, per flat page
  CountTables counts;

  double c_alpha = 1.0;
  std::vector<double> alpha_flat;  // K* simplex (LDA, LT-LDA)
  Matrix<double> alpha_site;       // site x (K + L) simplices (HA, HALT)
  std::vector<double> base;        // c0 * alpha0_k, K + L entries (HA, HALT)

  std::size_t topics_per_page() const { return num_topics + local_topics; }
  std::size_t num_pages() const { return page_site.size(); }
  bool hierarchical() const { return !alpha_site.empty(); }
  std::span<const double> alpha_for_site(std::size_t site) const {
    return hierarchical() ? alpha_site.row(site) : std::span<const double>(alpha_flat);
  }
  /// N_ij, recovered from the page-topic counts.
  std::int64_t page_length(std::size_t page) const;
};

/// Uniform random topic per token; c_alpha and c0*alpha0 at their prior
/// means; alpha uniform. Deterministic given seed.
ModelState init_state(const ModelSpec& spec, const NestedCorpus& corpus,
                      std::uint64_t seed);

/// State with `num_sites` sites and no pages. Useful for exercising the
/// hyperparameter updates against their priors.
ModelState empty_state(const ModelSpec& spec, std::size_t num_sites,
                       std::size_t vocab_size);

/// Tallies count tables from scratch. Throws ModelError when Z does not
/// mirror the corpus or holds an out-of-range topic.
CountTables recount(const NestedCorpus& corpus,
                    std::span<const std::vector<TopicId>> z,
                    const ModelSpec& spec);

/// Per-iteration conditional posterior means.
struct ConditionalMeans {
  Matrix<double> phi;    // K x V
  Matrix<double> psi;    // site x V (local variants), else empty
  Matrix<double> theta;  // page x (K + L)
};

struct TraceOptions {
  bool phi = true;
  bool psi = true;
  bool theta = true;
  friend bool operator==(const TraceOptions&, const TraceOptions&) = default;
};

/// Everything a fit leaves behind for evaluation and analysis: running means
/// of the conditional posterior means, scalar and alpha traces, and
/// optionally the full per-iteration distribution traces.
struct PosteriorSummary {
  ModelSpec spec;
  std::vector<std::string> vocabulary;
  std::vector<std::string> site_ids;
  std::vector<std::size_t> site_offsets;  // size num_sites + 1
  std::vector<std::string> page_ids;      // flat page order

  std::size_t iterations = 0;
  std::size_t burnin = 0;
  std::size_t thin = 1;
  std::size_t saved = 0;

  Matrix<double> phi_mean;
  Matrix<double> psi_mean;
  Matrix<double> theta_mean;
  Matrix<double> alpha_mean;  // one row (flat) or one row per site
  std::vector<double> base_mean;

  std::vector<double> c_alpha_trace;
  std::vector<Matrix<double>> alpha_trace;
  std::vector<std::vector<double>> base_trace;
  std::vector<Matrix<double>> phi_trace;
  std::vector<Matrix<double>> psi_trace;
  std::vector<Matrix<double>> theta_trace;

  /// Empty summary sized for `corpus` under `spec`.
  static PosteriorSummary for_corpus(const ModelSpec& spec,
                                     const NestedCorpus& corpus,
                                     std::size_t iterations, std::size_t burnin,
                                     std::size_t thin);

  /// Folds one saved iteration into the running means and traces.
  void record(const ConditionalMeans& means, const ModelState& state,
              const TraceOptions& traces);

  std::size_t num_sites() const { return site_ids.size(); }
  std::size_t num_pages() const { return page_ids.size(); }
  std::size_t topics_per_page() const { return spec.topics_per_page(); }
  PageRange site_pages(std::size_t site) const {
    return {site_offsets.at(site), site_offsets.at(site + 1)};
  }
  double c_alpha_mean() const;
};

/// (iterations - burnin) / thin, the number of saved iterations.
std::size_t saved_iterations(std::size_t iterations, std::size_t burnin,
                             std::size_t thin);

}  // namespace nestedtm
