// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "nestedtm/analysis.hpp"

namespace nestedtm {

SimulationScale parse_scale(std::string_view name) {
  if (name == "desk") return SimulationScale::desk();
  if (name == "paper") return SimulationScale::paper();
  throw std::invalid_argument("unknown scale '" + std::string(name) +
                              "' (expected desk or paper)");
}

double truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("truncated_normal needs lo < hi");
  if (!(sd > 0.0)) throw std::invalid_argument("truncated_normal needs sd > 0");
  std::normal_distribution<double> normal(mean, sd);
  for (;;) {
    const double x = normal(rng);
    if (x >= lo && x <= hi) return x;
  }
}

std::vector<std::size_t> scenario_local_counts(int scenario, std::size_t sites) {
  const std::size_t half = (sites + 1) / 2;
  std::vector<std::size_t> counts(sites, 0);
  for (std::size_t i = 0; i < sites; ++i) {
    switch (scenario) {
      case 1: counts[i] = 0; break;
      case 2: counts[i] = i < half ? 1 : 0; break;
      case 3: counts[i] = 1; break;
      case 4: counts[i] = i < half ? 1 : 2; break;
      case 5: counts[i] = 2; break;
      default:
        throw std::invalid_argument("scenario must be 1..5, got " +
                                    std::to_string(scenario));
    }
  }
  return counts;
}

double SyntheticTruth::site_local_average(std::size_t site) const {
  const std::size_t pages = scale.pages;
  const std::size_t k = scale.topics;
  double total = 0.0;
  for (std::size_t j = site * pages; j < (site + 1) * pages; ++j) {
    total += theta(j, k) + theta(j, k + 1);
  }
  return total / static_cast<double>(pages);
}

namespace {

Matrix<double> dirichlet_rows(std::size_t rows, std::size_t cols, double param,
                              Rng& rng) {
  Matrix<double> out(rows, cols);
  const std::vector<double> params(cols, param);
  for (std::size_t r = 0; r < rows; ++r) sample_dirichlet(params, out.row(r), rng);
  return out;
}

std::vector<double> cumulative(std::span<const double> weights) {
  std::vector<double> out(weights.size());
  std::partial_sum(weights.begin(), weights.end(), out.begin());
  return out;
}

}  // namespace

std::pair<NestedCorpus, SyntheticTruth> generate_scenario(
    int scenario, const SimulationScale& scale, std::uint64_t seed) {
  if (scale.topics == 0 || scale.vocab == 0 || scale.sites == 0 ||
      scale.pages == 0 || scale.words == 0) {
    throw std::invalid_argument("simulation scale dimensions must be positive");
  }
  const std::size_t k_global = scale.topics;
  const std::size_t v_size = scale.vocab;

  SyntheticTruth truth;
  truth.scenario = scenario;
  truth.seed = seed;
  truth.scale = scale;
  truth.local_counts = scenario_local_counts(scenario, scale.sites);

  Rng topic_rng = make_rng(seed, "simulate", {0});
  truth.phi = dirichlet_rows(k_global, v_size, 0.01, topic_rng);
  truth.mu = Matrix<double>(scale.sites, 2);
  truth.theta = Matrix<double>(scale.sites * scale.pages, k_global + 2);

  std::vector<std::vector<double>> phi_cum;
  for (std::size_t k = 0; k < k_global; ++k) phi_cum.push_back(cumulative(truth.phi.row(k)));

  std::vector<std::string> words;
  for (std::size_t v = 0; v < v_size; ++v) words.push_back("w" + std::to_string(v));

  const std::vector<double> global_params(k_global, 0.04);
  std::vector<double> global(k_global);
  std::vector<Site> sites;
  for (std::size_t i = 0; i < scale.sites; ++i) {
    const std::size_t locals = truth.local_counts[i];
    Rng rng = make_rng(seed, "simulate", {1, i});
    truth.psi.push_back(dirichlet_rows(locals, v_size, 0.01, rng));
    std::vector<std::vector<double>> psi_cum;
    for (std::size_t l = 0; l < locals; ++l) psi_cum.push_back(cumulative(truth.psi[i].row(l)));

    std::normal_distribution<double> normal;
    if (locals == 1) {
      truth.mu(i, 0) = truncated_normal(0.25, 0.05, 0.0, 1.0, rng);
    } else if (locals == 2) {
      truth.mu(i, 0) = 0.15 + 0.05 * normal(rng);
      truth.mu(i, 1) = 0.1 + 0.05 * normal(rng);
    }

    Site site{"s" + std::to_string(i), {}};
    for (std::size_t j = 0; j < scale.pages; ++j) {
      auto theta = truth.theta.row(i * scale.pages + j);
      sample_dirichlet(global_params, global, rng);
      std::copy(global.begin(), global.end(), theta.begin());
      for (std::size_t l = 0; l < locals; ++l) {
        theta[k_global + l] = std::max(0.0, truth.mu(i, l) + 0.05 * normal(rng));
      }
      const double total = std::accumulate(theta.begin(), theta.end(), 0.0);
      for (double& t : theta) t /= total;

      const auto theta_cum = cumulative(theta);
      Page page{"s" + std::to_string(i) + "p" + std::to_string(j), {}};
      page.tokens.reserve(scale.words);
      for (std::size_t h = 0; h < scale.words; ++h) {
        const std::size_t z = draw_from_cumulative(theta_cum, uniform01(rng));
        const auto& rows = z < k_global ? phi_cum[z] : psi_cum[z - k_global];
        page.tokens.push_back(
            static_cast<WordId>(draw_from_cumulative(rows, uniform01(rng))));
      }
      site.pages.push_back(std::move(page));
    }
    sites.push_back(std::move(site));
  }
  return {NestedCorpus(Vocabulary(std::move(words)), std::move(sites)),
          std::move(truth)};
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double RecoveryReport::fraction_below(double threshold) const {
  std::size_t n = 0, below = 0;
  for (const auto& r : rows) {
    if (r.true_locals != 0) continue;
    ++n;
    if (r.estimate < threshold) ++below;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(below) / static_cast<double>(n);
}

double RecoveryReport::fraction_within(double tolerance) const {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto n = std::count_if(rows.begin(), rows.end(), [&](const RecoveryRow& r) {
    return std::abs(r.error) <= tolerance;
  });
  return static_cast<double>(n) / static_cast<double>(rows.size());
}

double RecoveryReport::correlation() const {
  std::vector<double> est, tru;
  for (const auto& r : rows) {
    if (r.true_locals == 0) continue;
    est.push_back(r.estimate);
    tru.push_back(r.truth);
  }
  return pearson_correlation(est, tru);
}

RecoveryReport recovery_score(const PosteriorSummary& fit,
                              const SyntheticTruth& truth) {
  if (fit.spec.local_topics() == 0) {
    throw std::invalid_argument("recovery scoring needs a fit with a local topic");
  }
  if (fit.num_sites() != truth.scale.sites ||
      fit.num_pages() != truth.theta.rows()) {
    throw std::invalid_argument(
        "fit has " + std::to_string(fit.num_sites()) + " sites and " +
        std::to_string(fit.num_pages()) + " pages, truth has " +
        std::to_string(truth.scale.sites) + " and " +
        std::to_string(truth.theta.rows()));
  }
  if (fit.theta_mean.rows() != fit.num_pages()) {
    throw std::invalid_argument("fit has no averaged theta");
  }
  const std::size_t local = fit.spec.num_topics;
  RecoveryReport report;
  for (std::size_t i = 0; i < fit.num_sites(); ++i) {
    const auto pages = fit.site_pages(i);
    if (pages.size() != truth.scale.pages) {
      throw std::invalid_argument("site " + std::to_string(i) +
                                  " page count differs from the truth");
    }
    RecoveryRow row;
    row.site = i;
    row.true_locals = truth.local_counts[i];
    row.estimate = site_average_theta(fit.theta_mean, pages, local);
    row.truth = truth.site_local_average(i);
    row.error = row.estimate - row.truth;
    report.rows.push_back(row);
  }
  return report;
}

std::vector<ExtraneousWord> extraneous_local_words(const PosteriorSummary& fit,
                                                   const SyntheticTruth& truth,
                                                   const NestedCorpus& corpus,
                                                   double min_estimate,
                                                   std::size_t words) {
  const auto report = recovery_score(fit, truth);
  if (corpus.num_sites() != fit.num_sites() ||
      corpus.vocab_size() != fit.psi_mean.cols()) {
    throw std::invalid_argument("corpus does not match the fit");
  }
  std::vector<ExtraneousWord> out;
  for (const auto& row : report.rows) {
    if (row.true_locals != 0 || row.estimate <= min_estimate) continue;
    for (std::size_t v : top_word_indices(fit.psi_mean.row(row.site), words)) {
      const auto w = static_cast<WordId>(v);
      out.push_back({row.site, row.estimate, w, word_count_ratio(corpus, row.site, w)});
    }
  }
  return out;
}

}  // namespace nestedtm
