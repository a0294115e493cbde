// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nestedtm {

/// Zero-based vocabulary position. The token-index file format writes these
/// one-based.
using WordId = std::uint32_t;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws CorpusError on duplicate tokens.
  explicit Vocabulary(std::vector<std::string> words);

  /// Returns the id of `token`, appending it if unseen.
  WordId add(std::string_view token);
  std::optional<WordId> find(std::string_view token) const;

  const std::string& word(WordId id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

struct Page {
  std::string id;
  std::vector<WordId> tokens;
  friend bool operator==(const Page&, const Page&) = default;
};

struct Site {
  std::string id;
  std::vector<Page> pages;
  friend bool operator==(const Site&, const Site&) = default;
};

/// Half-open range of flat page indices belonging to one site.
struct PageRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

/// Pages nested in sites over a shared vocabulary. Immutable once built.
///
/// Pages also have a flat index in site-major order; model state, posterior
/// summaries and evaluation all address pages by that index.
class NestedCorpus {
 public:
  NestedCorpus() = default;
  /// Validates: at least one site, every site has a page, every page has a
  /// token, all tokens inside the vocabulary, ids unique.
  NestedCorpus(Vocabulary vocabulary, std::vector<Site> sites);

  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::span<const Site> sites() const { return sites_; }
  const Site& site(std::size_t i) const { return sites_.at(i); }

  std::size_t num_sites() const { return sites_.size(); }
  std::size_t num_pages() const { return page_site_.size(); }
  std::size_t num_tokens() const { return num_tokens_; }
  std::size_t vocab_size() const { return vocabulary_.size(); }

  const Page& page(std::size_t flat) const;
  std::size_t page_site(std::size_t flat) const { return page_site_.at(flat); }
  PageRange site_pages(std::size_t site) const {
    return {site_offsets_.at(site), site_offsets_.at(site + 1)};
  }
  /// Per-site page offsets, size num_sites() + 1.
  std::span<const std::size_t> site_offsets() const { return site_offsets_; }

  friend bool operator==(const NestedCorpus& a, const NestedCorpus& b) {
    return a.vocabulary_ == b.vocabulary_ && a.sites_ == b.sites_;
  }

 private:
  Vocabulary vocabulary_;
  std::vector<Site> sites_;
  std::vector<std::size_t> site_offsets_;
  std::vector<std::size_t> page_site_;
  std::vector<std::size_t> page_local_;
  std::size_t num_tokens_ = 0;
};

/// A page of raw string tokens, used to build corpora in memory.
struct RawPage {
  std::string site;
  std::string page;
  std::vector<std::string> tokens;
};

/// Groups pages by site (first-appearance order) and builds the vocabulary
/// in first-appearance order. Throws CorpusError on duplicate (site, page).
NestedCorpus build_corpus(std::span<const RawPage> pages);

enum class CorpusFormat { kJsonl, kTokenIndex };

CorpusFormat parse_corpus_format(std::string_view name);

NestedCorpus read_corpus(std::istream& in, CorpusFormat format);
NestedCorpus load_corpus(const std::filesystem::path& path,
                         CorpusFormat format);

void write_corpus(std::ostream& out, const NestedCorpus& corpus,
                  CorpusFormat format);
void save_corpus(const std::filesystem::path& path, const NestedCorpus& corpus,
                 CorpusFormat format);

/// Drops words seen on fewer than `min_word_pages` pages and pages with
/// fewer than `min_page_words` tokens, repeating until neither rule removes
/// anything. Sites left without pages are dropped and the vocabulary is
/// reindexed densely in first-appearance order.
NestedCorpus filter_corpus(const NestedCorpus& corpus,
                           std::size_t min_page_words = 10,
                           std::size_t min_word_pages = 10);

struct CorpusSplit {
  NestedCorpus train;
  NestedCorpus heldout;
  std::size_t fold_id = 0;
  std::uint64_t seed = 0;
};

/// Holds out round(fraction * M_i) pages per site, clamped to [1, M_i - 1],
/// chosen uniformly without replacement. Both halves keep every site in the
/// original order and share the input vocabulary, so site index i means the
/// same site in train and heldout.
CorpusSplit split_holdout(const NestedCorpus& corpus, double fraction,
                          std::uint64_t seed, std::size_t fold_id = 0);

}  // namespace nestedtm
