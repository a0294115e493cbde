// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#include "nestedtm/corpus.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include "test_util.hpp"

namespace nestedtm {
namespace {

std::vector<std::string> repeat(const std::string& token, std::size_t n) {
  return std::vector<std::string>(n, token);
}

TEST(Vocabulary, LookupRoundTrips) {
  Vocabulary v({"a", "b", "c"});
  for (WordId id = 0; id < v.size(); ++id) EXPECT_EQ(v.find(v.word(id)), id);
  EXPECT_FALSE(v.find("zzz").has_value());
  EXPECT_EQ(v.add("b"), 1u);
  EXPECT_EQ(v.add("d"), 3u);
}

TEST(Vocabulary, RejectsDuplicates) {
  EXPECT_THROW(Vocabulary({"a", "a"}), CorpusError);
}

TEST(LoadCorpus, TwoSitesTwoPages) {
  std::istringstream in(
      R"({"site":"s1","page":"p1","tokens":["a","b"]})"
      "\n"
      R"({"site":"s1","page":"p2","tokens":["c"]})"
      "\n"
      R"({"site":"s2","page":"p1","tokens":["d","e"]})"
      "\n"
      R"({"site":"s2","page":"p2","tokens":["f"]})"
      "\n");
  const auto c = read_corpus(in, CorpusFormat::kJsonl);
  EXPECT_EQ(c.num_sites(), 2u);
  EXPECT_EQ(c.site(0).pages.size(), 2u);
  EXPECT_EQ(c.site(1).pages.size(), 2u);
  EXPECT_EQ(c.vocab_size(), 6u);
  EXPECT_EQ(c.num_tokens(), 6u);
  EXPECT_EQ(c.page_site(3), 1u);
}

TEST(LoadCorpus, RepeatedTokenPage) {
  std::istringstream in(
      R"({"site":"s","page":"p","tokens":["wic","wic","wic","wic","wic"]})");
  const auto c = read_corpus(in, CorpusFormat::kJsonl);
  EXPECT_EQ(c.page(0).tokens.size(), 5u);
  EXPECT_EQ(c.vocab_size(), 1u);
}

TEST(LoadCorpus, MalformedLineReportsLineNumber) {
  std::istringstream in(R"({"site":"s","page":"p","tokens":["a"]})"
                        "\n{not json\n");
  try {
    read_corpus(in, CorpusFormat::kJsonl);
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadCorpus, EmptyFileAndDuplicates) {
  std::istringstream empty("\n\n");
  EXPECT_THROW(read_corpus(empty, CorpusFormat::kJsonl), CorpusError);
  std::istringstream dup(R"({"site":"s","page":"p","tokens":["a"]})"
                         "\n"
                         R"({"site":"s","page":"p","tokens":["b"]})");
  EXPECT_THROW(read_corpus(dup, CorpusFormat::kJsonl), CorpusError);
  std::istringstream empty_tok("1 1\na\n");
  EXPECT_THROW(read_corpus(empty_tok, CorpusFormat::kTokenIndex), CorpusError);
}

TEST(LoadCorpus, TokenIndexIsOneBased) {
  std::istringstream in("2 1\nx\ny\ns p 3 1 2 2\n");
  const auto c = read_corpus(in, CorpusFormat::kTokenIndex);
  EXPECT_EQ(c.page(0).tokens, (std::vector<WordId>{0, 1, 1}));
  std::istringstream bad("2 1\nx\ny\ns p 1 3\n");
  EXPECT_THROW(read_corpus(bad, CorpusFormat::kTokenIndex), CorpusError);
  std::istringstream short_page("2 1\nx\ny\ns p 3 1 2\n");
  EXPECT_THROW(read_corpus(short_page, CorpusFormat::kTokenIndex), CorpusError);
  std::istringstream wrong_sites("2 2\nx\ny\ns p 1 1\n");
  EXPECT_THROW(read_corpus(wrong_sites, CorpusFormat::kTokenIndex), CorpusError);
}

TEST(LoadCorpus, RoundTripBothFormats) {
  const auto c = testing::random_corpus(3, 4, 7, 12, 5);
  for (auto format : {CorpusFormat::kJsonl, CorpusFormat::kTokenIndex}) {
    std::stringstream buf;
    write_corpus(buf, c, format);
    const auto back = read_corpus(buf, format);
    if (format == CorpusFormat::kTokenIndex) {
      EXPECT_EQ(back, c);
    } else {
      // jsonl rebuilds the vocabulary in first-appearance order.
      ASSERT_EQ(back.num_pages(), c.num_pages());
      for (std::size_t d = 0; d < c.num_pages(); ++d) {
        ASSERT_EQ(back.page(d).tokens.size(), c.page(d).tokens.size());
        for (std::size_t h = 0; h < c.page(d).tokens.size(); ++h) {
          EXPECT_EQ(back.vocabulary().word(back.page(d).tokens[h]),
                    c.vocabulary().word(c.page(d).tokens[h]));
        }
      }
    }
  }
}

TEST(LoadCorpus, SaveLoadFile) {
  const auto c = testing::random_corpus(2, 3, 5, 6, 9);
  const auto path = std::filesystem::temp_directory_path() / "nestedtm_corpus_test.tok";
  save_corpus(path, c, CorpusFormat::kTokenIndex);
  EXPECT_EQ(load_corpus(path, CorpusFormat::kTokenIndex), c);
  std::filesystem::remove(path);
  EXPECT_THROW(load_corpus(path, CorpusFormat::kTokenIndex), CorpusError);
}

std::vector<RawPage> filter_fixture() {
  std::vector<RawPage> pages;
  // "common" on all 12 pages, "rare" on 9 of them; one 9-token page.
  for (int j = 0; j < 12; ++j) {
    RawPage p{"s" + std::to_string(j % 2), "p" + std::to_string(j), {}};
    p.tokens = repeat("common", j == 11 ? 9 : 12);
    if (j < 9) p.tokens.push_back("rare");
    pages.push_back(std::move(p));
  }
  return pages;
}

TEST(FilterCorpus, RemovesRareWordsAndShortPages) {
  const auto c = build_corpus(filter_fixture());
  const auto f = filter_corpus(c, 10, 10);
  EXPECT_FALSE(f.vocabulary().find("rare").has_value());
  EXPECT_EQ(f.vocab_size(), 1u);
  EXPECT_EQ(f.num_pages(), 11u);
  for (std::size_t d = 0; d < f.num_pages(); ++d) {
    EXPECT_GE(f.page(d).tokens.size(), 10u);
  }
}

TEST(FilterCorpus, VacuousThresholdsKeepCorpus) {
  const auto c = build_corpus(filter_fixture());
  EXPECT_EQ(filter_corpus(c, 1, 1), c);
  EXPECT_THROW(filter_corpus(c, 0, 1), std::invalid_argument);
}

TEST(FilterCorpus, FixedPointAndDenseIndices) {
  const auto c = testing::random_corpus(4, 15, 12, 40, 3);
  const auto f = filter_corpus(c, 5, 14);
  EXPECT_LT(f.vocab_size(), c.vocab_size());
  EXPECT_EQ(filter_corpus(f, 5, 14), f);
  std::set<WordId> used;
  for (std::size_t d = 0; d < f.num_pages(); ++d) {
    used.insert(f.page(d).tokens.begin(), f.page(d).tokens.end());
  }
  EXPECT_EQ(used.size(), f.vocab_size());
  EXPECT_EQ(*used.rbegin(), f.vocab_size() - 1);
}

TEST(FilterCorpus, CascadingRemoval) {
  // Dropping "x" shortens page q below the page threshold, which in turn
  // drops "y" below the word threshold.
  std::vector<RawPage> pages = {
      {"s", "p1", {"y", "z", "z"}},
      {"s", "p2", {"y", "z", "z"}},
      {"s", "q", {"x", "y", "z"}},
      {"t", "r1", {"z", "z", "z"}},
      {"t", "r2", {"z", "z", "z"}},
      {"t", "r3", {"z", "z", "z"}},
  };
  const auto f = filter_corpus(build_corpus(pages), 3, 3);
  EXPECT_EQ(f.vocab_size(), 1u);
  EXPECT_EQ(f.vocabulary().word(0), "z");
  EXPECT_EQ(f.num_pages(), 3u);
  EXPECT_EQ(f.num_sites(), 1u);
  EXPECT_EQ(f.site(0).id, "t");
}

TEST(FilterCorpus, EmptyResultThrows) {
  const auto c = build_corpus(filter_fixture());
  EXPECT_THROW(filter_corpus(c, 100, 1), CorpusError);
}

TEST(SplitHoldout, TwentyPercentOfTen) {
  const auto c = testing::random_corpus(1, 10, 3, 5, 1);
  const auto s = split_holdout(c, 0.2, 7);
  EXPECT_EQ(s.heldout.num_pages(), 2u);
  EXPECT_EQ(s.train.num_pages(), 8u);
}

TEST(SplitHoldout, HalfOfTwo) {
  const auto c = testing::random_corpus(3, 2, 3, 5, 1);
  const auto s = split_holdout(c, 0.5, 7);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s.heldout.site(i).pages.size(), 1u);
    EXPECT_EQ(s.train.site(i).pages.size(), 1u);
  }
}

TEST(SplitHoldout, DeterministicPartition) {
  const auto c = testing::random_corpus(4, 9, 3, 5, 2);
  const auto a = split_holdout(c, 0.2, 11, 3);
  const auto b = split_holdout(c, 0.2, 11, 3);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.heldout, b.heldout);
  EXPECT_EQ(a.train.vocabulary(), c.vocabulary());
  EXPECT_EQ(a.heldout.vocabulary(), c.vocabulary());
  for (std::size_t i = 0; i < c.num_sites(); ++i) {
    std::set<std::string> ids;
    for (const auto& p : a.train.site(i).pages) ids.insert(p.id);
    for (const auto& p : a.heldout.site(i).pages) EXPECT_TRUE(ids.insert(p.id).second);
    EXPECT_EQ(ids.size(), c.site(i).pages.size());
    EXPECT_EQ(a.heldout.site(i).pages.size(), 2u);  // round(1.8)
  }
  const auto other = split_holdout(c, 0.2, 11, 4);
  bool differs = false;
  for (std::size_t i = 0; i < c.num_sites(); ++i) {
    differs |= other.heldout.site(i) != a.heldout.site(i);
  }
  EXPECT_TRUE(differs);
}

TEST(SplitHoldout, Errors) {
  const auto single = testing::random_corpus(2, 1, 3, 5, 1);
  EXPECT_THROW(split_holdout(single, 0.2, 1), CorpusError);
  const auto c = testing::random_corpus(2, 4, 3, 5, 1);
  EXPECT_THROW(split_holdout(c, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_holdout(c, 1.0, 1), std::invalid_argument);
}

TEST(SplitHoldout, SelectionIsUniform) {
  const auto c = testing::random_corpus(1, 5, 1, 2, 1);
  std::vector<int> hits(5, 0);
  constexpr int kTrials = 20000;
  for (int t = 0; t < kTrials; ++t) {
    const auto s = split_holdout(c, 0.2, static_cast<std::uint64_t>(t));
    const auto& id = s.heldout.site(0).pages.at(0).id;
    ++hits[std::stoi(id.substr(1))];
  }
  for (int h : hits) EXPECT_NEAR(h / double(kTrials), 0.2, 0.015);
}

}  // namespace
}  // namespace nestedtm
