// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "nestedtm/corpus.hpp"
#include "nestedtm/random.hpp"

namespace nestedtm::testing {

/// Sites x pages x tokens, with tokens named w0..w{vocab-1} drawn uniformly.
inline NestedCorpus random_corpus(std::size_t sites, std::size_t pages,
                                  std::size_t tokens, std::size_t vocab,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> words;
  for (std::size_t v = 0; v < vocab; ++v) words.push_back("w" + std::to_string(v));
  std::vector<Site> out;
  for (std::size_t i = 0; i < sites; ++i) {
    Site site{"s" + std::to_string(i), {}};
    for (std::size_t j = 0; j < pages; ++j) {
      Page page{"p" + std::to_string(j), {}};
      for (std::size_t h = 0; h < tokens; ++h) {
        page.tokens.push_back(static_cast<WordId>(rng() % vocab));
      }
      site.pages.push_back(std::move(page));
    }
    out.push_back(std::move(site));
  }
  return NestedCorpus(Vocabulary(std::move(words)), std::move(out));
}

}  // namespace nestedtm::testing
