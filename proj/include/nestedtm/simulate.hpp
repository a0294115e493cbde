// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "nestedtm/corpus.hpp"
#include "nestedtm/matrix.hpp"
#include "nestedtm/model.hpp"
#include "nestedtm/random.hpp"

namespace nestedtm {

struct SimulationScale {
  std::size_t topics = 50;
  std::size_t vocab = 1000;
  std::size_t sites = 10;
  std::size_t pages = 50;  // per site
  std::size_t words = 100;  // per page

  static SimulationScale desk() { return {10, 200, 5, 20, 50}; }
  static SimulationScale paper() { return {50, 1000, 10, 50, 100}; }

  friend bool operator==(const SimulationScale&, const SimulationScale&) = default;
};

/// "desk" or "paper".
SimulationScale parse_scale(std::string_view name);

/// Rejection-sampled Normal(mean, sd^2) restricted to [lo, hi].
double truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

/// Number of local topics per site for a scenario. Scenarios 2 and 4 split
/// the sites at (M + 1) / 2: the first half has one local topic, the rest
/// have none (2) or two (4).
std::vector<std::size_t> scenario_local_counts(int scenario, std::size_t sites);

struct SyntheticTruth {
  int scenario = 1;
  std::uint64_t seed = 0;
  SimulationScale scale;
  std::vector<std::size_t> local_counts;  // per site, 0..2
  Matrix<double> phi;                     // topics x vocab
  std::vector<Matrix<double>> psi;        // per site: local_counts[i] x vocab
  Matrix<double> mu;                      // sites x 2, unstandardized means
  Matrix<double> theta;                   // pages x (topics + 2), flat order

  /// Mean over the site's pages of its summed local components.
  double site_local_average(std::size_t site) const;

  friend bool operator==(const SyntheticTruth&, const SyntheticTruth&) = default;
};

/// Draws one synthetic dataset. Words are named w0..w{V-1} and the
/// vocabulary keeps every word in index order, including unused ones.
/// Throws std::invalid_argument unless scenario is in 1..5.
std::pair<NestedCorpus, SyntheticTruth> generate_scenario(
    int scenario, const SimulationScale& scale, std::uint64_t seed);

struct RecoveryRow {
  std::size_t site = 0;
  std::size_t true_locals = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double error = 0.0;  // estimate - truth
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;

  /// Share of sites without true local topics whose estimate is below
  /// `threshold`; NaN if there are none.
  double fraction_below(double threshold) const;
  /// Share of sites with |error| <= tolerance.
  double fraction_within(double tolerance) const;
  /// Pearson correlation of estimate and truth over sites with at least
  /// one true local topic.
  double correlation() const;
};

/// Compares each site's average estimated local probability with the truth.
/// Throws std::invalid_argument if the fit has no local topic or its sites
/// and pages do not line up with the truth.
RecoveryReport recovery_score(const PosteriorSummary& fit,
                              const SyntheticTruth& truth);

struct ExtraneousWord {
  std::size_t site = 0;
  double estimate = 0.0;  // site average local probability
  WordId word = 0;
  double ratio = 0.0;     // word_count_ratio in that site
};

/// For sites without true local topics whose estimate exceeds
/// `min_estimate`, the word-count ratio of the top `words` words of the
/// fitted local topic.
std::vector<ExtraneousWord> extraneous_local_words(const PosteriorSummary& fit,
                                                   const SyntheticTruth& truth,
                                                   const NestedCorpus& corpus,
                                                   double min_estimate = 0.02,
                                                   std::size_t words = 3);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace nestedtm
