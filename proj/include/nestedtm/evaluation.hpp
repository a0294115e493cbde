// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nestedtm/corpus.hpp"
#include "nestedtm/matrix.hpp"
#include "nestedtm/model.hpp"
#include "nestedtm/sampler.hpp"

namespace nestedtm {

/// Point estimates used to score held-out pages: the averaged conditional
/// means and hyperparameter draws of a fit.
struct FitEstimates {
  std::size_t num_topics = 0;
  std::size_t local_topics = 0;
  Matrix<double> phi;    // K x V
  Matrix<double> psi;    // site x V, empty without local topics
  double c_alpha = 1.0;
  Matrix<double> alpha;  // one row shared by all sites, or one per site

  std::size_t topics_per_page() const { return num_topics + local_topics; }
  std::size_t vocab_size() const { return phi.cols(); }
  std::span<const double> alpha_for_site(std::size_t site) const {
    return alpha.rows() == 1 ? alpha.row(0) : alpha.row(site);
  }
};

FitEstimates estimate_from_summary(const PosteriorSummary& summary);

/// max(1, round(8000 / N)).
std::size_t default_particles(std::size_t page_length);

/// Left-to-right particle estimate of log P(tokens | phi, psi_i, c_alpha,
/// alpha_i). For every position h each particle re-samples the topics of
/// the earlier tokens in turn, contributes P(w_h | prefix topics), then
/// samples z_h given the prefix. Throws std::out_of_range on a token
/// outside the vocabulary or a site without estimates.
double left_to_right_loglik(std::span<const WordId> tokens, std::size_t site,
                            const FitEstimates& est, std::size_t particles,
                            std::uint64_t seed);

/// Per-page left-to-right estimates for every page of `heldout`, whose site
/// indices must line up with the fit. `particles` overrides
/// default_particles. Page d uses the seed derive_seed(seed, "particles",
/// {d}).
std::vector<double> heldout_loglik(const NestedCorpus& heldout,
                                   const FitEstimates& est,
                                   std::optional<std::size_t> particles,
                                   std::uint64_t seed, std::size_t jobs = 1);

struct CrossValidationConfig {
  std::size_t folds = 10;
  double holdout = 0.2;
  ChainConfig chain;
  std::optional<std::size_t> particles;
  std::size_t jobs = 1;
};

struct CvResult {
  ModelSpec spec;
  std::vector<double> fold_loglik;
  double mean() const;
};

struct CvProgress {
  std::size_t fold;
  std::size_t spec_index;
  double loglik;
};

/// Independent random holdout splits (fold f uses the "split" stream with
/// path {f}); every spec is fit on each training half with chain seed
/// derive_seed(seed, "chain", {f, s}) and scored on the held-out half with
/// particle seed derive_seed(seed, "particles", {f, s}).
std::vector<CvResult> cross_validate(
    std::span<const ModelSpec> specs, const NestedCorpus& corpus,
    const CrossValidationConfig& config, std::uint64_t seed,
    const std::function<void(const CvProgress&)>& progress = {});

/// `variant,K,fold,loglik` rows.
void write_cv_csv(std::ostream& out, std::span<const CvResult> results);

}  // namespace nestedtm
