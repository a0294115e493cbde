// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nestedtm/corpus.hpp"
#include "nestedtm/matrix.hpp"
#include "nestedtm/model.hpp"

namespace nestedtm {

/// Indices of the n largest entries, by descending value with ties broken
/// by ascending index. Throws std::invalid_argument if n exceeds the row.
std::vector<std::size_t> top_word_indices(std::span<const double> row,
                                          std::size_t n);
std::vector<std::string> top_words(std::span<const double> row,
                                   std::span<const std::string> vocabulary,
                                   std::size_t n);

/// Unweighted mean of theta(., k) over all pages.
double topic_prevalence(const Matrix<double>& theta, std::size_t k);
std::vector<double> topic_prevalences(const Matrix<double>& theta);

/// Mean of theta(j, k) over the pages of one site.
double site_average_theta(const Matrix<double>& theta, PageRange pages,
                          std::size_t k);

/// Rank of every word in a topic: 1 for the most probable, ties by index.
std::vector<std::size_t> word_ranks(std::span<const double> row);

/// argmin_k sum_v |R_{psi,v} - R_{k,v}| over all words, or over the top_m
/// words of psi. Ties go to the smallest k.
std::size_t match_topic_rank(std::span<const double> psi,
                             const Matrix<double>& phi,
                             std::optional<std::size_t> top_m = std::nullopt);
/// argmin_k sum_v (psi_v - phi_{k,v})^2, optionally over psi's top_m words.
std::size_t match_topic_prob(std::span<const double> psi,
                             const Matrix<double>& phi,
                             std::optional<std::size_t> top_m = std::nullopt);

/// max_j theta(j, k) over the site's pages.
double topic_coverage(const Matrix<double>& theta, PageRange pages,
                      std::size_t k);

struct AtcValue {
  double value = 0.0;     // NaN when every page was excluded
  std::size_t excluded = 0;  // pages whose local weight is 1
};

/// max_j theta(j, k) / (1 - theta(j, local)). Without a local index this is
/// topic_coverage. Pages entirely in the local topic are skipped and
/// counted in `excluded`.
AtcValue adjusted_topic_coverage(const Matrix<double>& theta, PageRange pages,
                                 std::size_t k,
                                 std::optional<std::size_t> local);

struct CredibleInterval {
  double lo = 0.0;
  double median = 0.0;
  double hi = 0.0;
};

/// Quantiles at (1-level)/2, 1/2 and 1-(1-level)/2 with linear
/// interpolation between order statistics. Needs at least two samples.
CredibleInterval credible_interval(std::span<const double> samples,
                                   double level = 0.95);

/// Count of word v in site i over the mean count in the other sites, with
/// the denominator floored at one.
double word_count_ratio(const NestedCorpus& corpus, std::size_t site, WordId v);

struct WordInterval {
  std::size_t topic = 0;
  std::size_t rank = 0;  // 1-based within the topic's top words
  WordId word = 0;
  std::string token;
  double mean = 0.0;
  CredibleInterval interval;
};

/// Per-iteration phi quantiles for the top-n words (by averaged phi) of
/// each topic of interest. Needs a phi trace with at least two iterations.
std::vector<WordInterval> interval_report(const PosteriorSummary& summary,
                                          std::span<const std::size_t> topics,
                                          std::size_t n, double level = 0.95);

struct SwitchingFlag {
  std::size_t topic = 0;
  std::size_t other = 0;
  WordId word = 0;
  double other_median = 0.0;
};

/// Top words of `topic` whose interval also contains the median of the
/// same word's per-iteration probability in `other`; such overlap suggests
/// the two labels trade places during the chain.
std::vector<SwitchingFlag> label_switching_flags(
    const PosteriorSummary& summary, std::span<const std::size_t> topics,
    std::size_t n, double level = 0.95);

struct CoverageRow {
  std::size_t site = 0;
  std::size_t topic = 0;
  double point = 0.0;  // ATC of the averaged theta
  CredibleInterval interval;  // over per-iteration ATC
  std::size_t excluded = 0;
};

/// ATC per site for `topic`, with intervals from the theta trace. Uses the
/// summary's local topic as the adjustment when the variant has one.
std::vector<CoverageRow> coverage_report(const PosteriorSummary& summary,
                                         std::size_t topic, double level = 0.95);

enum class MatchMethod { kRank, kProb };
MatchMethod parse_match_method(std::string_view name);

struct MatchingReport {
  std::vector<std::size_t> matched;  // per site: topic in the other model
  std::vector<std::size_t> duplicates;  // topics matched by more than one site
  std::vector<double> correct_local;  // site i average of its own match
  std::vector<double> other_local;    // site i average of other sites' matches
  std::vector<double> global;         // site averages of unmatched topics
};

/// Matches each site's local topic in `local_fit` to a topic in
/// `global_fit` and groups the global fit's site-average theta into
/// correct-local, other-local and unmatched-global values. Throws
/// std::invalid_argument unless both fits share vocabulary and sites and
/// `local_fit` has local topics.
MatchingReport matching_report(const PosteriorSummary& local_fit,
                               const PosteriorSummary& global_fit,
                               MatchMethod method,
                               std::optional<std::size_t> top_m);

}  // namespace nestedtm
