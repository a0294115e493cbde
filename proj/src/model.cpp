// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nestedtm/random.hpp"

namespace nestedtm {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kLda: return "lda";
    case Variant::kLtLda: return "lt";
    case Variant::kHaLda: return "ha";
    case Variant::kHaltLda: return "halt";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s.size() > 4 && s.ends_with("-lda")) s.resize(s.size() - 4);
  if (s.size() > 4 && s.ends_with("_lda")) s.resize(s.size() - 4);
  if (s == "lda") return Variant::kLda;
  if (s == "lt") return Variant::kLtLda;
  if (s == "ha") return Variant::kHaLda;
  if (s == "halt") return Variant::kHaltLda;
  throw std::invalid_argument("unknown model variant '" + std::string(name) +
                              "' (expected lda, lt, ha or halt)");
}

void ModelSpec::validate() const {
  if (num_topics == 0) throw std::invalid_argument("K must be at least 1");
  auto positive = [](double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + " must be positive");
    }
  };
  positive(a_alpha, "a_alpha");
  positive(b_alpha, "b_alpha");
  positive(beta, "beta");
  positive(gamma, "gamma");
  positive(base_shape, "base shape");
  positive(base_rate, "base rate");
  if (flat_alpha_mass) positive(*flat_alpha_mass, "alpha Dirichlet mass");
}

std::int64_t ModelState::page_length(std::size_t page) const {
  auto row = counts.page_topic.row(page);
  return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

namespace {

ModelState shell(const ModelSpec& spec, std::size_t num_sites,
                 std::size_t vocab_size) {
  spec.validate();
  ModelState s;
  s.num_topics = spec.num_topics;
  s.local_topics = spec.local_topics();
  s.vocab_size = vocab_size;
  s.num_sites = num_sites;
  const std::size_t kk = spec.topics_per_page();
  s.counts.word_topic = Matrix<std::int32_t>(vocab_size, spec.num_topics);
  s.counts.topic_totals.assign(spec.num_topics, 0);
  if (s.local_topics > 0) {
    s.counts.site_local = Matrix<std::int32_t>(num_sites, vocab_size);
    s.counts.local_totals.assign(num_sites, 0);
  }
  s.c_alpha = spec.a_alpha / spec.b_alpha;
  const double uniform = 1.0 / static_cast<double>(kk);
  if (is_hierarchical(spec.variant)) {
    s.alpha_site = Matrix<double>(num_sites, kk, uniform);
    s.base.assign(kk, spec.base_shape / spec.base_rate);
  } else {
    s.alpha_flat.assign(kk, uniform);
  }
  return s;
}

}  // namespace

ModelState empty_state(const ModelSpec& spec, std::size_t num_sites,
                       std::size_t vocab_size) {
  ModelState s = shell(spec, num_sites, vocab_size);
  s.counts.page_topic = Matrix<std::int32_t>(0, spec.topics_per_page());
  return s;
}

ModelState init_state(const ModelSpec& spec, const NestedCorpus& corpus,
                      std::uint64_t seed) {
  ModelState s = shell(spec, corpus.num_sites(), corpus.vocab_size());
  const std::size_t kk = spec.topics_per_page();
  Rng rng = make_rng(seed, "init");
  std::uniform_int_distribution<TopicId> pick(0, static_cast<TopicId>(kk - 1));
  s.page_site.resize(corpus.num_pages());
  s.z.resize(corpus.num_pages());
  for (std::size_t d = 0; d < corpus.num_pages(); ++d) {
    s.page_site[d] = corpus.page_site(d);
    const auto& tokens = corpus.page(d).tokens;
    s.z[d].resize(tokens.size());
    for (auto& t : s.z[d]) t = pick(rng);
  }
  s.counts = recount(corpus, s.z, spec);
  return s;
}

CountTables recount(const NestedCorpus& corpus,
                    std::span<const std::vector<TopicId>> z,
                    const ModelSpec& spec) {
  const std::size_t k_global = spec.num_topics;
  const std::size_t kk = spec.topics_per_page();
  const std::size_t vocab = corpus.vocab_size();
  if (z.size() != corpus.num_pages()) {
    throw ModelError("assignments cover " + std::to_string(z.size()) +
                     " pages, corpus has " + std::to_string(corpus.num_pages()));
  }
  CountTables c;
  c.word_topic = Matrix<std::int32_t>(vocab, k_global);
  c.topic_totals.assign(k_global, 0);
  if (spec.local_topics() > 0) {
    c.site_local = Matrix<std::int32_t>(corpus.num_sites(), vocab);
    c.local_totals.assign(corpus.num_sites(), 0);
  }
  c.page_topic = Matrix<std::int32_t>(corpus.num_pages(), kk);
  for (std::size_t d = 0; d < corpus.num_pages(); ++d) {
    const auto& tokens = corpus.page(d).tokens;
    if (z[d].size() != tokens.size()) {
      throw ModelError("page " + std::to_string(d) + " has " +
                       std::to_string(z[d].size()) + " assignments for " +
                       std::to_string(tokens.size()) + " tokens");
    }
    const std::size_t site = corpus.page_site(d);
    for (std::size_t h = 0; h < tokens.size(); ++h) {
      const TopicId k = z[d][h];
      if (k >= kk) {
        throw ModelError("topic " + std::to_string(k) + " out of range at page " +
                         std::to_string(d) + ", position " + std::to_string(h));
      }
      ++c.page_topic(d, k);
      if (k < k_global) {
        ++c.word_topic(tokens[h], k);
        ++c.topic_totals[k];
      } else {
        ++c.site_local(site, tokens[h]);
        ++c.local_totals[site];
      }
    }
  }
  return c;
}

std::size_t saved_iterations(std::size_t iterations, std::size_t burnin,
                             std::size_t thin) {
  if (thin == 0) throw std::invalid_argument("thin must be at least 1");
  if (iterations <= burnin) return 0;
  return (iterations - burnin) / thin;
}

PosteriorSummary PosteriorSummary::for_corpus(const ModelSpec& spec,
                                              const NestedCorpus& corpus,
                                              std::size_t iterations,
                                              std::size_t burnin,
                                              std::size_t thin) {
  PosteriorSummary s;
  s.spec = spec;
  s.vocabulary = corpus.vocabulary().words();
  for (const Site& site : corpus.sites()) {
    s.site_ids.push_back(site.id);
    for (const Page& page : site.pages) s.page_ids.push_back(page.id);
  }
  auto offsets = corpus.site_offsets();
  s.site_offsets.assign(offsets.begin(), offsets.end());
  s.iterations = iterations;
  s.burnin = burnin;
  s.thin = thin;
  const std::size_t kk = spec.topics_per_page();
  s.phi_mean = Matrix<double>(spec.num_topics, corpus.vocab_size());
  if (spec.local_topics() > 0) {
    s.psi_mean = Matrix<double>(corpus.num_sites(), corpus.vocab_size());
  }
  s.theta_mean = Matrix<double>(corpus.num_pages(), kk);
  s.alpha_mean = Matrix<double>(
      is_hierarchical(spec.variant) ? corpus.num_sites() : 1, kk);
  if (is_hierarchical(spec.variant)) s.base_mean.assign(kk, 0.0);
  return s;
}

namespace {

void fold_mean(Matrix<double>& mean, const Matrix<double>& x, double weight) {
  auto& m = mean.data();
  const auto& v = x.data();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] += (v[i] - m[i]) * weight;
}

}  // namespace

void PosteriorSummary::record(const ConditionalMeans& means,
                              const ModelState& state,
                              const TraceOptions& traces) {
  ++saved;
  const double w = 1.0 / static_cast<double>(saved);
  fold_mean(phi_mean, means.phi, w);
  if (!psi_mean.empty()) fold_mean(psi_mean, means.psi, w);
  fold_mean(theta_mean, means.theta, w);

  Matrix<double> alpha;
  if (state.hierarchical()) {
    alpha = state.alpha_site;
  } else {
    alpha = Matrix<double>(1, state.alpha_flat.size());
    std::copy(state.alpha_flat.begin(), state.alpha_flat.end(),
              alpha.row(0).begin());
  }
  fold_mean(alpha_mean, alpha, w);
  for (std::size_t k = 0; k < base_mean.size(); ++k) {
    base_mean[k] += (state.base[k] - base_mean[k]) * w;
  }

  c_alpha_trace.push_back(state.c_alpha);
  alpha_trace.push_back(std::move(alpha));
  if (!state.base.empty()) base_trace.push_back(state.base);
  if (traces.phi) phi_trace.push_back(means.phi);
  if (traces.psi && !means.psi.empty()) psi_trace.push_back(means.psi);
  if (traces.theta) theta_trace.push_back(means.theta);
}

double PosteriorSummary::c_alpha_mean() const {
  if (c_alpha_trace.empty()) return spec.a_alpha / spec.b_alpha;
  return std::accumulate(c_alpha_trace.begin(), c_alpha_trace.end(), 0.0) /
         static_cast<double>(c_alpha_trace.size());
}

}  // namespace nestedtm
