// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nestedtm {

std::vector<std::size_t> top_word_indices(std::span<const double> row,
                                          std::size_t n) {
  if (n > row.size()) {
    throw std::invalid_argument("asked for " + std::to_string(n) +
                                " top words from " + std::to_string(row.size()));
  }
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      return row[a] > row[b] || (row[a] == row[b] && a < b);
                    });
  order.resize(n);
  return order;
}

std::vector<std::string> top_words(std::span<const double> row,
                                   std::span<const std::string> vocabulary,
                                   std::size_t n) {
  if (vocabulary.size() != row.size()) {
    throw std::invalid_argument("vocabulary and topic row differ in size");
  }
  std::vector<std::string> out;
  for (std::size_t v : top_word_indices(row, n)) out.push_back(vocabulary[v]);
  return out;
}

double topic_prevalence(const Matrix<double>& theta, std::size_t k) {
  if (theta.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t d = 0; d < theta.rows(); ++d) total += theta(d, k);
  return total / static_cast<double>(theta.rows());
}

std::vector<double> topic_prevalences(const Matrix<double>& theta) {
  std::vector<double> out(theta.cols());
  for (std::size_t k = 0; k < theta.cols(); ++k) out[k] = topic_prevalence(theta, k);
  return out;
}

double site_average_theta(const Matrix<double>& theta, PageRange pages,
                          std::size_t k) {
  if (pages.size() == 0) throw std::invalid_argument("site has no pages");
  double total = 0.0;
  for (std::size_t d = pages.begin; d < pages.end; ++d) total += theta(d, k);
  return total / static_cast<double>(pages.size());
}

std::vector<std::size_t> word_ranks(std::span<const double> row) {
  const auto order = top_word_indices(row, row.size());
  std::vector<std::size_t> rank(row.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  return rank;
}

namespace {

std::vector<std::size_t> match_support(std::span<const double> psi,
                                       std::optional<std::size_t> top_m) {
  if (top_m) return top_word_indices(psi, std::min(*top_m, psi.size()));
  std::vector<std::size_t> all(psi.size());
  std::iota(all.begin(), all.end(), 0);
  return all;
}

template <typename Distance>
std::size_t argmin_topic(std::size_t topics, Distance&& distance) {
  if (topics == 0) throw std::invalid_argument("no candidate topics");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < topics; ++k) {
    const double d = distance(k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

void check_candidates(std::span<const double> psi, const Matrix<double>& phi) {
  if (phi.cols() != psi.size()) {
    throw std::invalid_argument("local and global topics use different vocabularies");
  }
}

}  // namespace

std::size_t match_topic_rank(std::span<const double> psi,
                             const Matrix<double>& phi,
                             std::optional<std::size_t> top_m) {
  check_candidates(psi, phi);
  const auto support = match_support(psi, top_m);
  const auto local_rank = word_ranks(psi);
  return argmin_topic(phi.rows(), [&](std::size_t k) {
    const auto rank = word_ranks(phi.row(k));
    double d = 0.0;
    for (std::size_t v : support) {
      d += std::abs(static_cast<double>(local_rank[v]) - static_cast<double>(rank[v]));
    }
    return d;
  });
}

std::size_t match_topic_prob(std::span<const double> psi,
                             const Matrix<double>& phi,
                             std::optional<std::size_t> top_m) {
  check_candidates(psi, phi);
  const auto support = match_support(psi, top_m);
  return argmin_topic(phi.rows(), [&](std::size_t k) {
    double d = 0.0;
    for (std::size_t v : support) {
      const double diff = psi[v] - phi(k, v);
      d += diff * diff;
    }
    return d;
  });
}

double topic_coverage(const Matrix<double>& theta, PageRange pages,
                      std::size_t k) {
  if (pages.size() == 0) throw std::invalid_argument("site has no pages");
  double best = theta(pages.begin, k);
  for (std::size_t d = pages.begin + 1; d < pages.end; ++d) {
    best = std::max(best, theta(d, k));
  }
  return best;
}

AtcValue adjusted_topic_coverage(const Matrix<double>& theta, PageRange pages,
                                 std::size_t k,
                                 std::optional<std::size_t> local) {
  if (!local) return {topic_coverage(theta, pages, k), 0};
  if (pages.size() == 0) throw std::invalid_argument("site has no pages");
  AtcValue out{std::numeric_limits<double>::quiet_NaN(), 0};
  bool any = false;
  for (std::size_t d = pages.begin; d < pages.end; ++d) {
    const double rest = 1.0 - theta(d, *local);
    if (!(rest > 0.0)) {
      ++out.excluded;
      continue;
    }
    const double ratio = theta(d, k) / rest;
    out.value = any ? std::max(out.value, ratio) : ratio;
    any = true;
  }
  return out;
}

CredibleInterval credible_interval(std::span<const double> samples,
                                   double level) {
  if (samples.size() < 2) {
    throw std::invalid_argument("credible interval needs at least two samples");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("credible level must be in (0, 1)");
  }
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  auto quantile = [&](double p) {
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
  };
  const double tail = (1.0 - level) / 2.0;
  return {quantile(tail), quantile(0.5), quantile(1.0 - tail)};
}

double word_count_ratio(const NestedCorpus& corpus, std::size_t site, WordId v) {
  if (v >= corpus.vocab_size()) throw std::out_of_range("word outside vocabulary");
  if (site >= corpus.num_sites()) throw std::out_of_range("site out of range");
  std::vector<double> counts(corpus.num_sites(), 0.0);
  for (std::size_t d = 0; d < corpus.num_pages(); ++d) {
    const auto& tokens = corpus.page(d).tokens;
    counts[corpus.page_site(d)] +=
        static_cast<double>(std::count(tokens.begin(), tokens.end(), v));
  }
  double others = 0.0;
  if (corpus.num_sites() > 1) {
    others = (std::accumulate(counts.begin(), counts.end(), 0.0) - counts[site]) /
             static_cast<double>(corpus.num_sites() - 1);
  }
  return counts[site] / std::max(1.0, others);
}

namespace {

void require_phi_trace(const PosteriorSummary& summary) {
  if (summary.phi_trace.size() < 2) {
    throw std::invalid_argument(
        "interval report needs a phi trace with at least two saved iterations");
  }
}

std::vector<double> phi_samples(const PosteriorSummary& summary, std::size_t k,
                                std::size_t v) {
  std::vector<double> out;
  out.reserve(summary.phi_trace.size());
  for (const auto& phi : summary.phi_trace) out.push_back(phi(k, v));
  return out;
}

void check_topics(const PosteriorSummary& summary,
                  std::span<const std::size_t> topics) {
  for (std::size_t k : topics) {
    if (k >= summary.spec.num_topics) {
      throw std::out_of_range("topic " + std::to_string(k) + " is not a global topic");
    }
  }
}

}  // namespace

std::vector<WordInterval> interval_report(const PosteriorSummary& summary,
                                          std::span<const std::size_t> topics,
                                          std::size_t n, double level) {
  require_phi_trace(summary);
  check_topics(summary, topics);
  std::vector<WordInterval> out;
  for (std::size_t k : topics) {
    const auto words = top_word_indices(summary.phi_mean.row(k), n);
    for (std::size_t r = 0; r < words.size(); ++r) {
      const auto v = static_cast<WordId>(words[r]);
      const auto samples = phi_samples(summary, k, v);
      out.push_back({k, r + 1, v, summary.vocabulary.at(v), summary.phi_mean(k, v),
                     credible_interval(samples, level)});
    }
  }
  return out;
}

std::vector<SwitchingFlag> label_switching_flags(
    const PosteriorSummary& summary, std::span<const std::size_t> topics,
    std::size_t n, double level) {
  const auto report = interval_report(summary, topics, n, level);
  std::vector<SwitchingFlag> out;
  for (const auto& row : report) {
    for (std::size_t other : topics) {
      if (other == row.topic) continue;
      const auto samples = phi_samples(summary, other, row.word);
      const double median = credible_interval(samples, level).median;
      if (median >= row.interval.lo && median <= row.interval.hi) {
        out.push_back({row.topic, other, row.word, median});
      }
    }
  }
  return out;
}

std::vector<CoverageRow> coverage_report(const PosteriorSummary& summary,
                                         std::size_t topic, double level) {
  if (topic >= summary.topics_per_page()) {
    throw std::out_of_range("topic " + std::to_string(topic) + " out of range");
  }
  if (summary.theta_trace.size() < 2) {
    throw std::invalid_argument(
        "coverage report needs a theta trace with at least two saved iterations");
  }
  std::optional<std::size_t> local;
  if (summary.spec.local_topics() > 0) local = summary.spec.num_topics;
  std::vector<CoverageRow> out;
  for (std::size_t i = 0; i < summary.num_sites(); ++i) {
    const PageRange pages = summary.site_pages(i);
    const AtcValue point = adjusted_topic_coverage(summary.theta_mean, pages, topic, local);
    std::vector<double> per_iteration;
    std::size_t excluded = 0;
    for (const auto& theta : summary.theta_trace) {
      const AtcValue v = adjusted_topic_coverage(theta, pages, topic, local);
      excluded = std::max(excluded, v.excluded);
      if (!std::isnan(v.value)) per_iteration.push_back(v.value);
    }
    CoverageRow row{i, topic, point.value, {}, excluded};
    if (per_iteration.size() >= 2) {
      row.interval = credible_interval(per_iteration, level);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.interval = {nan, nan, nan};
    }
    out.push_back(row);
  }
  return out;
}

MatchMethod parse_match_method(std::string_view name) {
  if (name == "rank") return MatchMethod::kRank;
  if (name == "prob") return MatchMethod::kProb;
  throw std::invalid_argument("unknown matching method '" + std::string(name) +
                              "' (expected rank or prob)");
}

MatchingReport matching_report(const PosteriorSummary& local_fit,
                               const PosteriorSummary& global_fit,
                               MatchMethod method,
                               std::optional<std::size_t> top_m) {
  if (local_fit.spec.local_topics() == 0 || local_fit.psi_mean.empty()) {
    throw std::invalid_argument("matching needs a fit with local topics");
  }
  if (local_fit.vocabulary != global_fit.vocabulary) {
    throw std::invalid_argument("the two fits use different vocabularies");
  }
  if (local_fit.site_ids != global_fit.site_ids) {
    throw std::invalid_argument("the two fits cover different sites");
  }
  const std::size_t sites = local_fit.num_sites();
  const std::size_t kk = global_fit.topics_per_page();
  MatchingReport out;
  for (std::size_t i = 0; i < sites; ++i) {
    const auto psi = local_fit.psi_mean.row(i);
    out.matched.push_back(method == MatchMethod::kRank
                              ? match_topic_rank(psi, global_fit.phi_mean, top_m)
                              : match_topic_prob(psi, global_fit.phi_mean, top_m));
  }
  std::vector<std::size_t> times(kk, 0);
  for (std::size_t k : out.matched) ++times[k];
  for (std::size_t k = 0; k < kk; ++k) {
    if (times[k] > 1) out.duplicates.push_back(k);
  }
  for (std::size_t i = 0; i < sites; ++i) {
    const PageRange pages = global_fit.site_pages(i);
    for (std::size_t j = 0; j < sites; ++j) {
      const double avg = site_average_theta(global_fit.theta_mean, pages, out.matched[j]);
      (i == j ? out.correct_local : out.other_local).push_back(avg);
    }
    for (std::size_t k = 0; k < global_fit.spec.num_topics; ++k) {
      if (times[k] == 0) {
        out.global.push_back(site_average_theta(global_fit.theta_mean, pages, k));
      }
    }
  }
  return out;
}

}  // namespace nestedtm
