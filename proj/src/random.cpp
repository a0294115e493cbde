// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/random.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

namespace nestedtm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master ^ splitmix64(fnv1a(stream)));
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 1));
  return h;
}

double sample_gamma(double shape, Rng& rng) {
  assert(shape > 0.0);
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(rng);
}

double sample_log_gamma(double shape, Rng& rng) {
  assert(shape > 0.0);
  if (shape >= 1.0) return std::log(sample_gamma(shape, rng));
  // G(a) = G(a + 1) * U^(1/a)
  double u = uniform01(rng);
  while (u <= 0.0) u = uniform01(rng);
  return std::log(sample_gamma(shape + 1.0, rng)) + std::log(u) / shape;
}

void sample_dirichlet(std::span<const double> params, std::span<double> out,
                      Rng& rng) {
  assert(params.size() == out.size() && !params.empty());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < params.size(); ++k) {
    out[k] = sample_log_gamma(params[k], rng);
    max_log = std::max(max_log, out[k]);
  }
  double total = 0.0;
  for (double& x : out) {
    x = std::exp(x - max_log);
    total += x;
  }
  constexpr double kFloor = std::numeric_limits<double>::min();
  for (double& x : out) x = std::max(x / total, kFloor);
}

std::size_t draw_from_cumulative(std::span<const double> cumulative,
                                 double u) {
  assert(!cumulative.empty() && cumulative.back() > 0.0);
  const double target = u * cumulative.back();
  for (std::size_t k = 0; k + 1 < cumulative.size(); ++k) {
    if (target < cumulative[k]) return k;
  }
  return cumulative.size() - 1;
}

std::size_t sample_categorical(std::span<const double> weights, Rng& rng) {
  std::vector<double> cumulative(weights.size());
  double running = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    running += weights[k];
    cumulative[k] = running;
  }
  return draw_from_cumulative(cumulative, uniform01(rng));
}

}  // namespace nestedtm
