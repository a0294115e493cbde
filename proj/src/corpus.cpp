// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "nestedtm/random.hpp"

namespace nestedtm {
namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw CorpusError("line " + std::to_string(line) + ": " + what);
}

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

NestedCorpus read_jsonl(std::istream& in) {
  std::vector<RawPage> pages;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail_line(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("site") || !obj.contains("page") ||
        !obj.contains("tokens")) {
      fail_line(line_no, "expected object with site, page and tokens");
    }
    const auto& site = obj["site"];
    const auto& page = obj["page"];
    const auto& tokens = obj["tokens"];
    if (!site.is_string() || !page.is_string() || !tokens.is_array()) {
      fail_line(line_no, "site and page must be strings, tokens an array");
    }
    RawPage raw{site.get<std::string>(), page.get<std::string>(), {}};
    raw.tokens.reserve(tokens.size());
    for (const auto& t : tokens) {
      if (!t.is_string()) fail_line(line_no, "tokens must be strings");
      raw.tokens.push_back(t.get<std::string>());
    }
    if (raw.tokens.empty()) fail_line(line_no, "page has no tokens");
    pages.push_back(std::move(raw));
  }
  if (pages.empty()) throw CorpusError("corpus file is empty");
  return build_corpus(pages);
}

NestedCorpus read_token_index(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw CorpusError("corpus file is empty");
  std::size_t vocab_size = 0;
  std::size_t num_sites = 0;
  {
    std::istringstream header(line);
    if (!(header >> vocab_size >> num_sites) || vocab_size == 0) {
      fail_line(line_no, "expected header 'V M' with V >= 1");
    }
  }

  std::vector<std::string> words;
  words.reserve(vocab_size);
  for (std::size_t v = 0; v < vocab_size; ++v) {
    if (!next_line()) fail_line(line_no, "vocabulary shorter than V");
    std::istringstream ls(line);
    std::string word, extra;
    ls >> word;
    if (ls >> extra) fail_line(line_no, "vocabulary line has extra fields");
    words.push_back(std::move(word));
  }
  Vocabulary vocabulary;
  try {
    vocabulary = Vocabulary(std::move(words));
  } catch (const CorpusError& e) {
    throw CorpusError(std::string("vocabulary: ") + e.what());
  }

  std::vector<Site> sites;
  std::unordered_map<std::string, std::size_t> site_index;
  std::set<std::pair<std::string, std::string>> seen;
  while (next_line()) {
    std::istringstream ls(line);
    std::string site_id, page_id;
    std::size_t n = 0;
    if (!(ls >> site_id >> page_id >> n)) {
      fail_line(line_no, "expected 'site_id page_id n w_1 ... w_n'");
    }
    if (n == 0) fail_line(line_no, "page has no tokens");
    Page page{page_id, {}};
    page.tokens.reserve(n);
    for (std::size_t h = 0; h < n; ++h) {
      long long w = 0;
      if (!(ls >> w)) fail_line(line_no, "fewer token indices than n");
      if (w < 1 || static_cast<std::size_t>(w) > vocab_size) {
        fail_line(line_no, "token index " + std::to_string(w) +
                               " outside 1.." + std::to_string(vocab_size));
      }
      page.tokens.push_back(static_cast<WordId>(w - 1));
    }
    std::string extra;
    if (ls >> extra) fail_line(line_no, "more token indices than n");
    if (!seen.emplace(site_id, page_id).second) {
      fail_line(line_no, "duplicate page (" + site_id + ", " + page_id + ")");
    }
    auto [it, inserted] = site_index.emplace(site_id, sites.size());
    if (inserted) sites.push_back(Site{site_id, {}});
    sites[it->second].pages.push_back(std::move(page));
  }
  if (sites.empty()) throw CorpusError("corpus has no pages");
  if (sites.size() != num_sites) {
    throw CorpusError("header declares " + std::to_string(num_sites) +
                      " sites but file has " + std::to_string(sites.size()));
  }
  return NestedCorpus(std::move(vocabulary), std::move(sites));
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> words)
    : words_(std::move(words)) {
  index_.reserve(words_.size());
  for (std::size_t v = 0; v < words_.size(); ++v) {
    if (words_[v].empty()) throw CorpusError("empty vocabulary token");
    if (!index_.emplace(words_[v], static_cast<WordId>(v)).second) {
      throw CorpusError("duplicate vocabulary token '" + words_[v] + "'");
    }
  }
}

WordId Vocabulary::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(token);
  index_.emplace(words_.back(), id);
  return id;
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NestedCorpus::NestedCorpus(Vocabulary vocabulary, std::vector<Site> sites)
    : vocabulary_(std::move(vocabulary)), sites_(std::move(sites)) {
  if (sites_.empty()) throw CorpusError("corpus has no sites");
  if (vocabulary_.size() == 0) throw CorpusError("vocabulary is empty");
  std::set<std::string> site_ids;
  site_offsets_.reserve(sites_.size() + 1);
  site_offsets_.push_back(0);
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const Site& site = sites_[i];
    if (!site_ids.insert(site.id).second) {
      throw CorpusError("duplicate site id '" + site.id + "'");
    }
    if (site.pages.empty()) {
      throw CorpusError("site '" + site.id + "' has no pages");
    }
    std::set<std::string> page_ids;
    for (std::size_t j = 0; j < site.pages.size(); ++j) {
      const Page& page = site.pages[j];
      if (!page_ids.insert(page.id).second) {
        throw CorpusError("duplicate page (" + site.id + ", " + page.id + ")");
      }
      if (page.tokens.empty()) {
        throw CorpusError("page (" + site.id + ", " + page.id +
                          ") has no tokens");
      }
      for (WordId w : page.tokens) {
        if (w >= vocabulary_.size()) {
          throw CorpusError("token index outside vocabulary in page (" +
                            site.id + ", " + page.id + ")");
        }
      }
      num_tokens_ += page.tokens.size();
      page_site_.push_back(i);
      page_local_.push_back(j);
    }
    site_offsets_.push_back(page_site_.size());
  }
}

const Page& NestedCorpus::page(std::size_t flat) const {
  return sites_[page_site_.at(flat)].pages[page_local_[flat]];
}

NestedCorpus build_corpus(std::span<const RawPage> pages) {
  Vocabulary vocabulary;
  std::vector<Site> sites;
  std::unordered_map<std::string, std::size_t> site_index;
  std::set<std::pair<std::string, std::string>> seen;
  for (const RawPage& raw : pages) {
    if (!seen.emplace(raw.site, raw.page).second) {
      throw CorpusError("duplicate page (" + raw.site + ", " + raw.page + ")");
    }
    Page page{raw.page, {}};
    page.tokens.reserve(raw.tokens.size());
    for (const auto& token : raw.tokens) {
      if (token.empty()) throw CorpusError("empty token in page " + raw.page);
      page.tokens.push_back(vocabulary.add(token));
    }
    auto [it, inserted] = site_index.emplace(raw.site, sites.size());
    if (inserted) sites.push_back(Site{raw.site, {}});
    sites[it->second].pages.push_back(std::move(page));
  }
  return NestedCorpus(std::move(vocabulary), std::move(sites));
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "token-index" || name == "tok") return CorpusFormat::kTokenIndex;
  throw std::invalid_argument("unknown corpus format '" + std::string(name) +
                              "' (expected jsonl or token-index)");
}

NestedCorpus read_corpus(std::istream& in, CorpusFormat format) {
  return format == CorpusFormat::kJsonl ? read_jsonl(in) : read_token_index(in);
}

NestedCorpus load_corpus(const std::filesystem::path& path,
                         CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  try {
    return read_corpus(in, format);
  } catch (const CorpusError& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
}

void write_corpus(std::ostream& out, const NestedCorpus& corpus,
                  CorpusFormat format) {
  const auto& words = corpus.vocabulary().words();
  if (format == CorpusFormat::kJsonl) {
    for (const Site& site : corpus.sites()) {
      for (const Page& page : site.pages) {
        nlohmann::json obj;
        obj["site"] = site.id;
        obj["page"] = page.id;
        auto& tokens = obj["tokens"] = nlohmann::json::array();
        for (WordId w : page.tokens) tokens.push_back(words[w]);
        out << obj.dump() << '\n';
      }
    }
    return;
  }
  out << corpus.vocab_size() << ' ' << corpus.num_sites() << '\n';
  for (const auto& word : words) {
    if (has_space(word)) {
      throw CorpusError("token '" + word + "' contains whitespace");
    }
    out << word << '\n';
  }
  for (const Site& site : corpus.sites()) {
    for (const Page& page : site.pages) {
      if (has_space(site.id) || has_space(page.id)) {
        throw CorpusError("site/page ids must not contain whitespace in "
                          "token-index format");
      }
      out << site.id << ' ' << page.id << ' ' << page.tokens.size();
      for (WordId w : page.tokens) out << ' ' << (w + 1);
      out << '\n';
    }
  }
}

void save_corpus(const std::filesystem::path& path, const NestedCorpus& corpus,
                 CorpusFormat format) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write corpus file " + path.string());
  write_corpus(out, corpus, format);
}

NestedCorpus filter_corpus(const NestedCorpus& corpus,
                           std::size_t min_page_words,
                           std::size_t min_word_pages) {
  if (min_page_words < 1 || min_word_pages < 1) {
    throw std::invalid_argument("filter thresholds must be >= 1");
  }
  std::vector<Site> sites(corpus.sites().begin(), corpus.sites().end());
  const std::size_t vocab_size = corpus.vocab_size();
  std::vector<char> keep_word(vocab_size, 1);

  for (bool changed = true; changed;) {
    changed = false;
    std::vector<std::size_t> doc_freq(vocab_size, 0);
    std::vector<char> seen(vocab_size, 0);
    for (const Site& site : sites) {
      for (const Page& page : site.pages) {
        std::fill(seen.begin(), seen.end(), 0);
        for (WordId w : page.tokens) {
          if (!seen[w]) {
            seen[w] = 1;
            ++doc_freq[w];
          }
        }
      }
    }
    for (std::size_t v = 0; v < vocab_size; ++v) {
      if (keep_word[v] && doc_freq[v] < min_word_pages) {
        keep_word[v] = 0;
        changed = true;
      }
    }
    for (Site& site : sites) {
      for (Page& page : site.pages) {
        std::erase_if(page.tokens, [&](WordId w) { return !keep_word[w]; });
      }
      const auto before = site.pages.size();
      std::erase_if(site.pages, [&](const Page& page) {
        return page.tokens.size() < min_page_words;
      });
      if (site.pages.size() != before) changed = true;
    }
    std::erase_if(sites, [](const Site& site) { return site.pages.empty(); });
  }
  if (sites.empty()) throw CorpusError("corpus is empty after filtering");

  // Dense reindex in scan order.
  const auto& old_words = corpus.vocabulary().words();
  std::vector<WordId> remap(vocab_size, 0);
  std::vector<char> assigned(vocab_size, 0);
  Vocabulary vocabulary;
  for (Site& site : sites) {
    for (Page& page : site.pages) {
      for (WordId& w : page.tokens) {
        if (!assigned[w]) {
          remap[w] = vocabulary.add(old_words[w]);
          assigned[w] = 1;
        }
        w = remap[w];
      }
    }
  }
  return NestedCorpus(std::move(vocabulary), std::move(sites));
}

CorpusSplit split_holdout(const NestedCorpus& corpus, double fraction,
                          std::uint64_t seed, std::size_t fold_id) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must be in (0, 1)");
  }
  Rng rng = make_rng(seed, "split", {fold_id});
  std::vector<Site> train_sites;
  std::vector<Site> heldout_sites;
  for (const Site& site : corpus.sites()) {
    const std::size_t pages = site.pages.size();
    if (pages < 2) {
      throw CorpusError("site '" + site.id +
                        "' has a single page; cannot hold out and retain");
    }
    auto held = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(pages) + 0.5));
    held = std::clamp<std::size_t>(held, 1, pages - 1);

    // Partial Fisher-Yates: the first `held` slots are the held-out draw.
    std::vector<std::size_t> order(pages);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t t = 0; t < held; ++t) {
      const auto remaining = pages - t;
      const auto pick =
          t + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(remaining));
      std::swap(order[t], order[std::min(pick, pages - 1)]);
    }
    std::vector<char> is_held(pages, 0);
    for (std::size_t t = 0; t < held; ++t) is_held[order[t]] = 1;

    Site train{site.id, {}};
    Site heldout{site.id, {}};
    for (std::size_t j = 0; j < pages; ++j) {
      (is_held[j] ? heldout : train).pages.push_back(site.pages[j]);
    }
    train_sites.push_back(std::move(train));
    heldout_sites.push_back(std::move(heldout));
  }
  return CorpusSplit{NestedCorpus(corpus.vocabulary(), std::move(train_sites)),
                     NestedCorpus(corpus.vocabulary(), std::move(heldout_sites)),
                     fold_id, seed};
}

}  // namespace nestedtm
