// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>

namespace nestedtm {

using Rng = std::mt19937_64;

/// Counter-based sub-stream derivation: the seed for a named consumer depends
/// only on (master, name, path), so adding a new consumer never shifts the
/// stream of an existing one.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::initializer_list<std::uint64_t> path = {});

inline Rng make_rng(std::uint64_t master, std::string_view stream,
                    std::initializer_list<std::uint64_t> path = {}) {
  return Rng(derive_seed(master, stream, path));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
  return std::generate_canonical<double, 53>(rng);
}

/// Gamma(shape, 1) draw.
double sample_gamma(double shape, Rng& rng);

/// log of a Gamma(shape, 1) draw, computed without underflow for tiny shapes.
double sample_log_gamma(double shape, Rng& rng);

/// Dirichlet draw via normalized log-gammas. Components that would underflow
/// are floored at the smallest normal double so their logs stay finite.
void sample_dirichlet(std::span<const double> params, std::span<double> out,
                      Rng& rng);

/// Index of the first cumulative weight exceeding `u * total`, where `total`
/// is the last element. `cumulative` must be non-decreasing with a positive
/// last element.
std::size_t draw_from_cumulative(std::span<const double> cumulative, double u);

/// Draws an index with probability proportional to `weights` (unnormalized).
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

}  // namespace nestedtm
