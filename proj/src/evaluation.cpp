// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "nestedtm/parallel.hpp"
#include "nestedtm/random.hpp"

namespace nestedtm {

FitEstimates estimate_from_summary(const PosteriorSummary& summary) {
  if (summary.saved == 0) {
    throw std::invalid_argument("posterior summary has no saved iterations");
  }
  FitEstimates est;
  est.num_topics = summary.spec.num_topics;
  est.local_topics = summary.spec.local_topics();
  est.phi = summary.phi_mean;
  est.psi = summary.psi_mean;
  est.c_alpha = summary.c_alpha_mean();
  est.alpha = summary.alpha_mean;
  return est;
}

std::size_t default_particles(std::size_t page_length) {
  if (page_length == 0) throw std::invalid_argument("page length must be >= 1");
  const auto r = static_cast<std::size_t>(
      std::llround(8000.0 / static_cast<double>(page_length)));
  return std::max<std::size_t>(1, r);
}

double left_to_right_loglik(std::span<const WordId> tokens, std::size_t site,
                            const FitEstimates& est, std::size_t particles,
                            std::uint64_t seed) {
  if (particles == 0) throw std::invalid_argument("need at least one particle");
  const std::size_t n = tokens.size();
  const std::size_t kk = est.topics_per_page();
  const std::size_t k_global = est.num_topics;
  if (est.alpha.rows() != 1 && site >= est.alpha.rows()) {
    throw std::out_of_range("no alpha estimate for site " + std::to_string(site));
  }
  if (est.local_topics > 0 && site >= est.psi.rows()) {
    throw std::out_of_range("no local topic estimate for site " + std::to_string(site));
  }

  // Word probability under each topic, by position.
  Matrix<double> word_prob(n, kk);
  for (std::size_t h = 0; h < n; ++h) {
    const WordId w = tokens[h];
    if (w >= est.vocab_size()) {
      throw std::out_of_range("token index " + std::to_string(w) +
                              " outside vocabulary of size " +
                              std::to_string(est.vocab_size()));
    }
    for (std::size_t k = 0; k < k_global; ++k) word_prob(h, k) = est.phi(k, w);
    if (est.local_topics > 0) word_prob(h, k_global) = est.psi(site, w);
  }
  std::vector<double> prior(kk);
  const auto alpha = est.alpha_for_site(site);
  for (std::size_t k = 0; k < kk; ++k) prior[k] = est.c_alpha * alpha[k];
  const double prior_total = std::accumulate(prior.begin(), prior.end(), 0.0);

  Rng rng = make_rng(seed, "particles");
  Matrix<TopicId> z(particles, n);
  Matrix<std::int32_t> m(particles, kk);
  std::vector<double> cumulative(kk);

  auto draw = [&](std::span<const std::int32_t> counts, std::size_t h) {
    double running = 0.0;
    for (std::size_t k = 0; k < kk; ++k) {
      running += (counts[k] + prior[k]) * word_prob(h, k);
      cumulative[k] = running;
    }
    return static_cast<TopicId>(draw_from_cumulative(cumulative, uniform01(rng)));
  };

  double ll = 0.0;
  for (std::size_t h = 0; h < n; ++h) {
    double p = 0.0;
    for (std::size_t r = 0; r < particles; ++r) {
      auto zr = z.row(r);
      auto mr = m.row(r);
      for (std::size_t hp = 0; hp < h; ++hp) {
        --mr[zr[hp]];
        zr[hp] = draw(mr, hp);
        ++mr[zr[hp]];
      }
      double term = 0.0;
      for (std::size_t k = 0; k < kk; ++k) {
        term += (mr[k] + prior[k]) * word_prob(h, k);
      }
      p += term / (static_cast<double>(h) + prior_total);
      zr[h] = draw(mr, h);
      ++mr[zr[h]];
    }
    ll += std::log(p / static_cast<double>(particles));
  }
  return ll;
}

std::vector<double> heldout_loglik(const NestedCorpus& heldout,
                                   const FitEstimates& est,
                                   std::optional<std::size_t> particles,
                                   std::uint64_t seed, std::size_t jobs) {
  std::vector<double> out(heldout.num_pages());
  parallel_for(heldout.num_pages(), jobs, [&](std::size_t d) {
    const auto& tokens = heldout.page(d).tokens;
    const std::size_t r = particles.value_or(default_particles(tokens.size()));
    out[d] = left_to_right_loglik(tokens, heldout.page_site(d), est, r,
                                  derive_seed(seed, "particles", {d}));
  });
  return out;
}

double CvResult::mean() const {
  if (fold_loglik.empty()) return 0.0;
  return std::accumulate(fold_loglik.begin(), fold_loglik.end(), 0.0) /
         static_cast<double>(fold_loglik.size());
}

std::vector<CvResult> cross_validate(
    std::span<const ModelSpec> specs, const NestedCorpus& corpus,
    const CrossValidationConfig& config, std::uint64_t seed,
    const std::function<void(const CvProgress&)>& progress) {
  if (config.folds == 0) throw std::invalid_argument("need at least one fold");
  config.chain.validate();
  for (const auto& spec : specs) spec.validate();

  std::vector<CorpusSplit> splits;
  splits.reserve(config.folds);
  for (std::size_t f = 0; f < config.folds; ++f) {
    splits.push_back(split_holdout(corpus, config.holdout, seed, f));
  }

  std::vector<CvResult> results;
  for (const auto& spec : specs) {
    results.push_back({spec, std::vector<double>(config.folds, 0.0)});
  }
  ChainConfig chain = config.chain;
  chain.traces = {false, false, false};

  std::mutex progress_mutex;
  const std::size_t tasks = config.folds * specs.size();
  parallel_for(tasks, config.jobs, [&](std::size_t task) {
    const std::size_t f = task / specs.size();
    const std::size_t s = task % specs.size();
    const auto summary = run_chain(specs[s], splits[f].train, chain,
                                   derive_seed(seed, "chain", {f, s}));
    const auto est = estimate_from_summary(summary);
    const auto pages = heldout_loglik(splits[f].heldout, est, config.particles,
                                      derive_seed(seed, "particles", {f, s}));
    const double total = std::accumulate(pages.begin(), pages.end(), 0.0);
    results[s].fold_loglik[f] = total;
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress({f, s, total});
    }
  });
  return results;
}

void write_cv_csv(std::ostream& out, std::span<const CvResult> results) {
  out << "variant,K,fold,loglik\n";
  out.precision(17);
  for (const auto& r : results) {
    for (std::size_t f = 0; f < r.fold_loglik.size(); ++f) {
      out << variant_name(r.spec.variant) << ',' << r.spec.num_topics << ',' << f
          << ',' << r.fold_loglik[f] << '\n';
    }
  }
}

}  // namespace nestedtm
