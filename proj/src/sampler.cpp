// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/sampler.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace nestedtm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void remove_token(ModelState& s, std::size_t page, WordId w, TopicId k) {
  --s.counts.page_topic(page, k);
  if (k < s.num_topics) {
    --s.counts.word_topic(w, k);
    --s.counts.topic_totals[k];
  } else {
    const std::size_t site = s.page_site[page];
    --s.counts.site_local(site, w);
    --s.counts.local_totals[site];
  }
}

void add_token(ModelState& s, std::size_t page, WordId w, TopicId k) {
  ++s.counts.page_topic(page, k);
  if (k < s.num_topics) {
    ++s.counts.word_topic(w, k);
    ++s.counts.topic_totals[k];
  } else {
    const std::size_t site = s.page_site[page];
    ++s.counts.site_local(site, w);
    ++s.counts.local_totals[site];
  }
}

double inverse_denominator(std::int64_t total, double vscale) {
  return 1.0 / (static_cast<double>(total) + vscale);
}

double log_gamma_density(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) -
         rate * x;
}

double log_dirichlet_density(std::span<const double> x,
                             std::span<const double> params) {
  double total = 0.0;
  double out = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    total += params[k];
    out += (params[k] - 1.0) * std::log(x[k]) - std::lgamma(params[k]);
  }
  return out + std::lgamma(total);
}

}  // namespace

void token_topic_weights(const ModelState& state, const ModelSpec& spec,
                         std::size_t page, WordId w, std::span<double> out) {
  const std::size_t k_global = state.num_topics;
  const std::size_t site = state.page_site[page];
  const auto alpha = state.alpha_for_site(site);
  const auto m = state.counts.page_topic.row(page);
  const double vbeta = static_cast<double>(state.vocab_size) * spec.beta;
  for (std::size_t k = 0; k < k_global; ++k) {
    const double prior = state.c_alpha * alpha[k];
    out[k] = (m[k] + prior) * (state.counts.word_topic(w, k) + spec.beta) *
             inverse_denominator(state.counts.topic_totals[k], vbeta);
  }
  if (state.local_topics > 0) {
    const double vgamma = static_cast<double>(state.vocab_size) * spec.gamma;
    const double prior = state.c_alpha * alpha[k_global];
    out[k_global] =
        (m[k_global] + prior) * (state.counts.site_local(site, w) + spec.gamma) *
        inverse_denominator(state.counts.local_totals[site], vgamma);
  }
}

TopicId sample_token_topic(ModelState& state, const ModelSpec& spec,
                           const NestedCorpus& corpus, std::size_t page,
                           std::size_t h, Rng& rng) {
  const WordId w = corpus.page(page).tokens[h];
  TopicId& z = state.z[page][h];
  remove_token(state, page, w, z);
  std::vector<double> cumulative(state.topics_per_page());
  token_topic_weights(state, spec, page, w, cumulative);
  std::partial_sum(cumulative.begin(), cumulative.end(), cumulative.begin());
  assert(cumulative.back() > 0.0);
  z = static_cast<TopicId>(draw_from_cumulative(cumulative, uniform01(rng)));
  add_token(state, page, w, z);
  return z;
}

void sweep_tokens(ModelState& state, const ModelSpec& spec,
                  const NestedCorpus& corpus, Rng& rng) {
  const std::size_t k_global = state.num_topics;
  const std::size_t kk = state.topics_per_page();
  const bool local = state.local_topics > 0;
  const double beta = spec.beta;
  const double gamma = spec.gamma;
  const double vbeta = static_cast<double>(state.vocab_size) * beta;
  const double vgamma = static_cast<double>(state.vocab_size) * gamma;
  auto& counts = state.counts;

  std::vector<double> inv_topic(k_global);
  for (std::size_t k = 0; k < k_global; ++k) {
    inv_topic[k] = inverse_denominator(counts.topic_totals[k], vbeta);
  }
  std::vector<double> prior(kk);
  std::vector<double> cumulative(kk);

  std::size_t current_site = std::numeric_limits<std::size_t>::max();
  for (std::size_t d = 0; d < state.num_pages(); ++d) {
    const std::size_t site = state.page_site[d];
    if (site != current_site) {
      current_site = site;
      const auto alpha = state.alpha_for_site(site);
      for (std::size_t k = 0; k < kk; ++k) prior[k] = state.c_alpha * alpha[k];
    }
    double inv_local =
        local ? inverse_denominator(counts.local_totals[site], vgamma) : 0.0;
    std::int32_t* m = counts.page_topic.row(d).data();
    const auto& tokens = corpus.page(d).tokens;
    auto& z = state.z[d];

    for (std::size_t h = 0; h < tokens.size(); ++h) {
      const WordId w = tokens[h];
      std::int32_t* nw = counts.word_topic.row(w).data();
      TopicId k = z[h];
      --m[k];
      if (k < k_global) {
        --nw[k];
        inv_topic[k] = inverse_denominator(--counts.topic_totals[k], vbeta);
      } else {
        --counts.site_local(site, w);
        inv_local = inverse_denominator(--counts.local_totals[site], vgamma);
      }

      double running = 0.0;
      for (std::size_t t = 0; t < k_global; ++t) {
        running += (m[t] + prior[t]) * (nw[t] + beta) * inv_topic[t];
        cumulative[t] = running;
      }
      if (local) {
        running += (m[k_global] + prior[k_global]) *
                   (counts.site_local(site, w) + gamma) * inv_local;
        cumulative[k_global] = running;
      }
      k = static_cast<TopicId>(draw_from_cumulative(cumulative, uniform01(rng)));

      z[h] = k;
      ++m[k];
      if (k < k_global) {
        ++nw[k];
        inv_topic[k] = inverse_denominator(++counts.topic_totals[k], vbeta);
      } else {
        ++counts.site_local(site, w);
        inv_local = inverse_denominator(++counts.local_totals[site], vgamma);
      }
    }
  }
}

std::int32_t sample_table_count(std::int32_t m, double mass, Rng& rng) {
  if (m <= 0) return 0;
  std::int32_t tables = 1;
  for (std::int32_t t = 1; t < m; ++t) {
    if (uniform01(rng) * (mass + t) < mass) ++tables;
  }
  return tables;
}

Matrix<std::int64_t> draw_table_counts(const ModelState& state, Rng& rng) {
  const std::size_t kk = state.topics_per_page();
  Matrix<std::int64_t> tables(state.num_sites, kk);
  for (std::size_t d = 0; d < state.num_pages(); ++d) {
    const std::size_t site = state.page_site[d];
    const auto alpha = state.alpha_for_site(site);
    const auto m = state.counts.page_topic.row(d);
    auto out = tables.row(site);
    for (std::size_t k = 0; k < kk; ++k) {
      out[k] += sample_table_count(m[k], state.c_alpha * alpha[k], rng);
    }
  }
  return tables;
}

void sample_site_alpha(ModelState& state, const Matrix<std::int64_t>& tables,
                       std::size_t site, Rng& rng) {
  const std::size_t kk = state.topics_per_page();
  std::vector<double> params(kk);
  const auto lambda = tables.row(site);
  for (std::size_t k = 0; k < kk; ++k) {
    params[k] = state.base[k] + static_cast<double>(lambda[k]);
  }
  sample_dirichlet(params, state.alpha_site.row(site), rng);
}

void sample_flat_alpha(ModelState& state, const ModelSpec& spec,
                       const Matrix<std::int64_t>& tables, Rng& rng) {
  const std::size_t kk = state.topics_per_page();
  std::vector<double> params(kk, spec.flat_prior_mass());
  for (std::size_t i = 0; i < tables.rows(); ++i) {
    const auto lambda = tables.row(i);
    for (std::size_t k = 0; k < kk; ++k) params[k] += static_cast<double>(lambda[k]);
  }
  sample_dirichlet(params, state.alpha_flat, rng);
}

double log_c_alpha_target(const ModelState& state, const ModelSpec& spec,
                          double c_alpha) {
  if (!(c_alpha > 0.0) || !std::isfinite(c_alpha)) return kNegInf;
  double out = (spec.a_alpha - 1.0) * std::log(c_alpha) - spec.b_alpha * c_alpha;
  const std::size_t kk = state.topics_per_page();
  const double lg_c = std::lgamma(c_alpha);
  for (std::size_t d = 0; d < state.num_pages(); ++d) {
    const auto alpha = state.alpha_for_site(state.page_site[d]);
    const auto m = state.counts.page_topic.row(d);
    std::int64_t n = 0;
    for (std::size_t k = 0; k < kk; ++k) {
      if (m[k] == 0) continue;
      n += m[k];
      const double a = c_alpha * alpha[k];
      out += std::lgamma(a + m[k]) - std::lgamma(a);
    }
    out += lg_c - std::lgamma(c_alpha + static_cast<double>(n));
  }
  return out;
}

double log_base_target(const ModelState& state, const ModelSpec& spec,
                       std::size_t k, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) return kNegInf;
  double out = (spec.base_shape - 1.0) * std::log(value) - spec.base_rate * value;
  if (state.num_sites == 0) return out;
  double rest = 0.0;
  for (std::size_t t = 0; t < state.base.size(); ++t) {
    if (t != k) rest += state.base[t];
  }
  const double per_site = std::lgamma(value + rest) - std::lgamma(value);
  for (std::size_t i = 0; i < state.num_sites; ++i) {
    out += per_site + (value - 1.0) * std::log(state.alpha_site(i, k));
  }
  return out;
}

namespace {

template <typename Target>
bool log_normal_step(double& value, double step, Rng& rng, Target&& target) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double proposal = value * std::exp(step * normal(rng));
  const double log_u = std::log(uniform01(rng));
  const double proposed = target(proposal);
  if (!std::isfinite(proposed)) return false;
  const double current = target(value);
  const double log_ratio =
      proposed - current + std::log(proposal) - std::log(value);
  if (log_u < log_ratio) {
    value = proposal;
    return true;
  }
  return false;
}

}  // namespace

bool mh_update_c_alpha(ModelState& state, const ModelSpec& spec, Rng& rng,
                       double step) {
  return log_normal_step(state.c_alpha, step, rng, [&](double c) {
    return log_c_alpha_target(state, spec, c);
  });
}

bool mh_update_base(ModelState& state, const ModelSpec& spec, std::size_t k,
                    Rng& rng, double step) {
  double value = state.base.at(k);
  const bool accepted = log_normal_step(value, step, rng, [&](double b) {
    return log_base_target(state, spec, k, b);
  });
  state.base[k] = value;
  return accepted;
}

ConditionalMeans conditional_means(const ModelState& state,
                                   const ModelSpec& spec) {
  const std::size_t k_global = state.num_topics;
  const std::size_t kk = state.topics_per_page();
  const std::size_t vocab = state.vocab_size;
  ConditionalMeans out;

  out.phi = Matrix<double>(k_global, vocab);
  for (std::size_t k = 0; k < k_global; ++k) {
    const double inv = 1.0 / (static_cast<double>(state.counts.topic_totals[k]) +
                              static_cast<double>(vocab) * spec.beta);
    for (std::size_t v = 0; v < vocab; ++v) {
      out.phi(k, v) = (state.counts.word_topic(v, k) + spec.beta) * inv;
    }
  }
  if (state.local_topics > 0) {
    out.psi = Matrix<double>(state.num_sites, vocab);
    for (std::size_t i = 0; i < state.num_sites; ++i) {
      const double inv =
          1.0 / (static_cast<double>(state.counts.local_totals[i]) +
                 static_cast<double>(vocab) * spec.gamma);
      for (std::size_t v = 0; v < vocab; ++v) {
        out.psi(i, v) = (state.counts.site_local(i, v) + spec.gamma) * inv;
      }
    }
  }
  out.theta = Matrix<double>(state.num_pages(), kk);
  for (std::size_t d = 0; d < state.num_pages(); ++d) {
    const auto alpha = state.alpha_for_site(state.page_site[d]);
    const auto m = state.counts.page_topic.row(d);
    auto row = out.theta.row(d);
    double total = 0.0;
    for (std::size_t k = 0; k < kk; ++k) {
      row[k] = m[k] + state.c_alpha * alpha[k];
      total += row[k];
    }
    for (double& x : row) x /= total;
  }
  return out;
}

double log_joint(const ModelState& state, const ModelSpec& spec) {
  const std::size_t vocab = state.vocab_size;
  const double v = static_cast<double>(vocab);
  double out = 0.0;

  for (std::size_t k = 0; k < state.num_topics; ++k) {
    out += std::lgamma(v * spec.beta) - v * std::lgamma(spec.beta) -
           std::lgamma(state.counts.topic_totals[k] + v * spec.beta);
    for (std::size_t w = 0; w < vocab; ++w) {
      out += std::lgamma(state.counts.word_topic(w, k) + spec.beta);
    }
  }
  if (state.local_topics > 0) {
    for (std::size_t i = 0; i < state.num_sites; ++i) {
      out += std::lgamma(v * spec.gamma) - v * std::lgamma(spec.gamma) -
             std::lgamma(state.counts.local_totals[i] + v * spec.gamma);
      for (std::size_t w = 0; w < vocab; ++w) {
        out += std::lgamma(state.counts.site_local(i, w) + spec.gamma);
      }
    }
  }

  // The c_alpha target already holds the Gamma prior and the page-topic
  // likelihood.
  out += log_c_alpha_target(state, spec, state.c_alpha) +
         spec.a_alpha * std::log(spec.b_alpha) - std::lgamma(spec.a_alpha);

  if (state.hierarchical()) {
    for (double b : state.base) {
      out += log_gamma_density(b, spec.base_shape, spec.base_rate);
    }
    for (std::size_t i = 0; i < state.num_sites; ++i) {
      out += log_dirichlet_density(state.alpha_site.row(i), state.base);
    }
  } else {
    std::vector<double> params(state.alpha_flat.size(), spec.flat_prior_mass());
    out += log_dirichlet_density(state.alpha_flat, params);
  }
  return out;
}

SweepStats sweep(ModelState& state, const ModelSpec& spec,
                 const NestedCorpus& corpus, Rng& rng, double mh_step) {
  SweepStats stats;
  sweep_tokens(state, spec, corpus, rng);
  const auto tables = draw_table_counts(state, rng);
  if (state.hierarchical()) {
    for (std::size_t i = 0; i < state.num_sites; ++i) {
      sample_site_alpha(state, tables, i, rng);
    }
  } else {
    sample_flat_alpha(state, spec, tables, rng);
  }
  stats.c_alpha_accepted = mh_update_c_alpha(state, spec, rng, mh_step);
  if (state.hierarchical()) {
    for (std::size_t k = 0; k < state.base.size(); ++k) {
      stats.base_accepted += mh_update_base(state, spec, k, rng, mh_step);
    }
  }
  return stats;
}

void ChainConfig::validate() const {
  if (thin == 0) throw std::invalid_argument("thin must be at least 1");
  if (iterations <= burnin) {
    throw std::invalid_argument("iterations must exceed burn-in");
  }
  if (!(mh_step > 0.0)) throw std::invalid_argument("MH step must be positive");
}

Chain::Chain(const ModelSpec& spec, const NestedCorpus& corpus,
             ChainConfig config, std::uint64_t seed)
    : corpus_(&corpus),
      spec_(spec),
      config_(config),
      seed_(seed),
      rng_(make_rng(seed, "chain")) {
  config_.validate();
  state_ = init_state(spec_, corpus, seed);
  summary_ = PosteriorSummary::for_corpus(spec_, corpus, config_.iterations,
                                          config_.burnin, config_.thin);
}

Chain::Chain(const NestedCorpus& corpus, ChainSnapshot snapshot)
    : corpus_(&corpus),
      spec_(snapshot.spec),
      config_(snapshot.config),
      seed_(snapshot.seed),
      state_(std::move(snapshot.state)),
      summary_(std::move(snapshot.summary)),
      sweeps_done_(snapshot.sweeps_done),
      c_alpha_accepted_(snapshot.c_alpha_accepted),
      base_accepted_(snapshot.base_accepted) {
  config_.validate();
  std::istringstream in(snapshot.rng_state);
  in >> rng_;
  if (!in) throw ModelError("snapshot holds an unreadable RNG state");
  if (recount(corpus, state_.z, spec_) != state_.counts) {
    throw ModelError("snapshot counts do not match its assignments on this corpus");
  }
}

SweepStats Chain::step() {
  if (finished()) return {};
  SweepStats stats = sweep(state_, spec_, *corpus_, rng_, config_.mh_step);
  ++sweeps_done_;
  c_alpha_accepted_ += stats.c_alpha_accepted;
  base_accepted_ += stats.base_accepted;
  if (sweeps_done_ > config_.burnin &&
      (sweeps_done_ - config_.burnin) % config_.thin == 0) {
    summary_.record(conditional_means(state_, spec_), state_, config_.traces);
  }
  return stats;
}

const PosteriorSummary& Chain::run(const Observer& observer) {
  while (!finished()) {
    const SweepStats stats = step();
    if (observer) observer(*this, stats);
  }
  return summary_;
}

double Chain::c_alpha_acceptance() const {
  if (sweeps_done_ == 0) return 0.0;
  return static_cast<double>(c_alpha_accepted_) / static_cast<double>(sweeps_done_);
}

double Chain::base_acceptance() const {
  if (sweeps_done_ == 0 || state_.base.empty()) return 0.0;
  return static_cast<double>(base_accepted_) /
         static_cast<double>(sweeps_done_ * state_.base.size());
}

ChainSnapshot Chain::snapshot() const {
  std::ostringstream out;
  out << rng_;
  return ChainSnapshot{spec_,           config_,       seed_,
                       sweeps_done_,    c_alpha_accepted_, base_accepted_,
                       out.str(),       state_,        summary_};
}

PosteriorSummary run_chain(const ModelSpec& spec, const NestedCorpus& corpus,
                           const ChainConfig& config, std::uint64_t seed) {
  Chain chain(spec, corpus, config, seed);
  chain.run();
  return chain.take_summary();
}

}  // namespace nestedtm
