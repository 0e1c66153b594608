#include "phrasemuf/bm25.hpp"

#include <cmath>
#include <gtest/gtest.h>
#include <set>

#include "oracles.hpp"
#include "phrasemuf/error.hpp"
#include "phrasemuf/text.hpp"

namespace phrasemuf {
namespace {

Corpus two_docs() { return Corpus({{"d1", "a b"}, {"d2", "a c"}}); }

TEST(Bm25IndexTest, PostingsAndLengths) {
  auto idx = build_index(two_docs());
  ASSERT_NE(idx.postings("a"), nullptr);
  EXPECT_EQ(*idx.postings("a"), (std::vector<Posting>{{0, 1}, {1, 1}}));
  EXPECT_EQ(*idx.postings("b"), (std::vector<Posting>{{0, 1}}));
  EXPECT_EQ(*idx.postings("c"), (std::vector<Posting>{{1, 1}}));
  EXPECT_EQ(idx.postings("zzz"), nullptr);
  EXPECT_DOUBLE_EQ(idx.avgdl(), 2.0);
  EXPECT_EQ(idx.doc_count(), 2u);
}

TEST(Bm25IndexTest, SingleDocAndRepeatedTokens) {
  auto idx = build_index(Corpus({{"x", "x x x"}}));
  EXPECT_DOUBLE_EQ(idx.avgdl(), 3.0);
  EXPECT_EQ(idx.postings("x")->front().tf, 3u);
}

TEST(Bm25IndexTest, RejectsEmptyCorpusAndBadParams) {
  EXPECT_THROW(build_index(Corpus{}), InputError);
  EXPECT_THROW(build_index(two_docs(), {-1.0, 0.5}), InputError);
  EXPECT_THROW(build_index(two_docs(), {1.2, 1.5}), InputError);
}

TEST(Bm25ScoreTest, WorkedExample) {
  auto idx = build_index(two_docs());
  EXPECT_NEAR(bm25_score(idx, "c", 1), std::log(2.0), 1e-12);
  EXPECT_EQ(bm25_score(idx, "c", 0), 0.0);
  EXPECT_EQ(bm25_score(idx, "nothing here", 0), 0.0);
  EXPECT_THROW(bm25_score(idx, "c", 2), InputError);
}

TEST(TopKTest, OrderingAndTieBreak) {
  auto idx = build_index(two_docs());
  auto top = top_k(idx, "c", 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].passage_id, "d2");
  EXPECT_NEAR(top[0].score, 0.693147, 1e-6);
  EXPECT_EQ(top[1].passage_id, "d1");
  EXPECT_EQ(top[1].score, 0.0);
  EXPECT_EQ(top_k(idx, "c", 1).size(), 1u);
  EXPECT_EQ(top_k(idx, "c", 10).size(), 2u);

  auto zeros = top_k(build_index(Corpus({{"u", "p"}, {"v", "q"}, {"w", "r"}})), "none", 2);
  ASSERT_EQ(zeros.size(), 2u);
  EXPECT_EQ(zeros[0].passage_id, "u");
  EXPECT_EQ(zeros[1].passage_id, "v");
}

Corpus ranked_corpus() {
  // Passage i mentions "needle" i+1 times; later passages rank higher.
  std::vector<Passage> ps;
  for (int i = 0; i < 12; ++i) {
    std::string text;
    for (int j = 0; j <= i; ++j) text += "needle ";
    for (int j = i; j < 12; ++j) text += "hay ";
    ps.push_back({"p" + std::to_string(i), text});
  }
  return Corpus(std::move(ps));
}

TEST(MineHardNegativesTest, ExcludesPositiveAtTop) {
  auto idx = build_index(ranked_corpus());
  auto top = top_k(idx, "needle", 10);
  QueryRecord q{"q", "needle", top[0].passage_id};
  auto neg = mine_hard_negatives(idx, q, 9);
  ASSERT_EQ(neg.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(neg[i], top[i + 1].passage_id);
}

TEST(MineHardNegativesTest, PositiveOutsideTopK) {
  auto idx = build_index(ranked_corpus());
  auto top = top_k(idx, "needle", 12);
  QueryRecord q{"q", "needle", top.back().passage_id};
  auto neg = mine_hard_negatives(idx, q, 9);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(neg[i], top[i].passage_id);
}

TEST(MineHardNegativesTest, BoundaryAndTooSmall) {
  auto corpus = Corpus({{"a", "x"}, {"b", "y"}, {"c", "z"}, {"d", "w"}});
  auto idx = build_index(corpus);
  auto neg = mine_hard_negatives(idx, {"q", "x", "b"}, 3);
  EXPECT_EQ(std::set<std::string>(neg.begin(), neg.end()), (std::set<std::string>{"a", "c", "d"}));
  EXPECT_THROW(mine_hard_negatives(idx, {"q", "x", "b"}, 4), InputError);
}

// Random toy corpora against the exhaustive scalar oracle.
TEST(Bm25PropertyTest, MatchesScalarOracle) {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n_docs = 1 + rng.next_below(50);
    const auto vocab = 1 + rng.next_below(20);
    std::vector<Passage> ps;
    std::vector<std::string> texts;
    for (std::size_t d = 0; d < n_docs; ++d) {
      std::string text = "t" + std::to_string(rng.next_below(vocab));
      const auto len = rng.next_below(12);
      for (std::size_t i = 0; i < len; ++i) text += " t" + std::to_string(rng.next_below(vocab));
      texts.push_back(text);
      ps.push_back({"d" + std::to_string(d), text});
    }
    const Bm25Params params{0.5 + rng.next_below(200) / 100.0, rng.next_below(101) / 100.0};
    auto idx = build_index(Corpus(std::move(ps)), params);
    std::string query = "t" + std::to_string(rng.next_below(vocab + 3));
    for (int i = 0; i < 3; ++i) query += " T" + std::to_string(rng.next_below(vocab + 3));
    const auto all = bm25_score_all(idx, query);
    for (std::size_t d = 0; d < n_docs; ++d) {
      const double ref = oracle::bm25(texts, query, d, params.k1, params.b);
      ASSERT_NEAR(bm25_score(idx, query, d), ref, 1e-9);
      ASSERT_EQ(all[d], bm25_score(idx, query, d));
    }
  }
}

TEST(Bm25PropertyTest, HardNegativesNeverContainPositiveOrDuplicates) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Passage> ps;
    const auto n = 11 + rng.next_below(30);
    for (std::size_t d = 0; d < n; ++d) {
      ps.push_back({"d" + std::to_string(d), "w" + std::to_string(rng.next_below(5)) + " w" +
                                                  std::to_string(rng.next_below(5))});
    }
    auto idx = build_index(Corpus(ps));
    QueryRecord q{"q", "w1 w2", ps[rng.next_below(n)].id};
    auto neg = mine_hard_negatives(idx, q, 10);
    std::set<std::string> uniq(neg.begin(), neg.end());
    ASSERT_EQ(uniq.size(), neg.size());
    ASSERT_EQ(neg.size(), 10u);
    ASSERT_FALSE(uniq.contains(q.positive_passage_id));
  }
}

TEST(Bm25PropertyTest, ExtraOccurrenceNeverLowersScore) {
  // Add an occurrence of the query term while removing a non-query token, so
  // the document length is unchanged.
  SplitMix64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> toks;
    const auto len = 2 + rng.next_below(10);
    for (std::size_t i = 0; i < len; ++i) toks.push_back(rng.next_below(3) == 0 ? "q" : "o" + std::to_string(i));
    toks[0] = "o0";
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& t : v) s += t + " ";
      return s;
    };
    std::vector<Passage> base{{"x", join(toks)}, {"y", "o1 o2 q"}, {"z", "o3"}};
    auto more = toks;
    more[0] = "q";
    std::vector<Passage> bumped{{"x", join(more)}, {"y", "o1 o2 q"}, {"z", "o3"}};
    const double before = bm25_score(build_index(Corpus(base)), "q", 0);
    const double after = bm25_score(build_index(Corpus(bumped)), "q", 0);
    ASSERT_GE(after, before);
  }
}

TEST(Bm25IndexTest, StatsLine) {
  EXPECT_EQ(build_index(two_docs()).stats_line(), "docs=2 terms=3 avgdl=2 k1=1.2 b=0.75");
}

}  // namespace
}  // namespace phrasemuf
