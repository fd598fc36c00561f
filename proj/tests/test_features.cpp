#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "mwo/features.hpp"
#include "mwo/rng.hpp"

using namespace mwo;

namespace {

std::vector<TokenDoc> docs_of(const std::vector<std::vector<std::string>>& toks) {
  std::vector<TokenDoc> out;
  for (std::size_t i = 0; i < toks.size(); ++i) out.push_back({"D" + std::to_string(i), toks[i]});
  return out;
}

std::vector<TokenDoc> random_corpus(std::uint64_t seed, std::size_t n_docs, std::size_t alphabet, std::size_t max_len) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> toks(n_docs);
  for (auto& d : toks) {
    std::size_t len = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < len; ++i) d.push_back("t" + std::to_string(rng.below(alphabet)));
  }
  return docs_of(toks);
}

}  // namespace

TEST(Vocabulary, SmallExampleAndThreshold) {
  auto docs = docs_of({{"a", "b"}, {"b", "c"}});
  auto v = build_vocabulary(docs, 1);
  EXPECT_EQ(v.terms(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(v.document_frequency(0), 1u);
  EXPECT_EQ(v.document_frequency(1), 2u);
  EXPECT_EQ(v.document_frequency(2), 1u);
  EXPECT_EQ(build_vocabulary(docs, 2).terms(), (std::vector<std::string>{"b"}));
}

TEST(Vocabulary, EmptyCorpusIsAnError) { EXPECT_THROW(build_vocabulary({}, 1), Error); }

TEST(Vocabulary, MatchesSetComprehensionOn1000Docs) {
  auto docs = random_corpus(5, 1000, 300, 12);
  std::set<std::string> all;
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    std::set<std::string> seen(d.tokens.begin(), d.tokens.end());
    for (const auto& t : seen) {
      all.insert(t);
      ++df[t];
    }
  }
  auto v = build_vocabulary(docs, 1);
  EXPECT_EQ(v.terms(), std::vector<std::string>(all.begin(), all.end()));
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.document_frequency(i), df[v.term(i)]);
}

TEST(Vocabulary, JsonRoundTrip) {
  auto v = build_vocabulary(docs_of({{"x", "y"}, {"y"}}));
  EXPECT_EQ(nlohmann::json(v).get<FeatureVocabulary>(), v);
}

TEST(Counts, RowAndOov) {
  FeatureVocabulary v({"a", "b", "c"}, {1, 1, 1}, 3);
  auto row = count_row({"b", "b", "c"}, v);
  EXPECT_EQ(row, (SparseRow{{1, 2.0}, {2, 1.0}}));
  auto m = vectorize_counts(docs_of({{"zz", "yy"}, {"a"}}), v);
  EXPECT_EQ(m.zero_rows(), (std::vector<std::size_t>{0}));
  EXPECT_EQ(m.n_rows(), 2u);
}

TEST(Counts, MatchesDenseBruteForce) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto docs = random_corpus(seed, 15, 10, 8);
    auto v = build_vocabulary(docs);
    auto m = vectorize_counts(docs, v);
    for (std::size_t r = 0; r < docs.size(); ++r)
      for (std::size_t c = 0; c < v.size(); ++c) {
        double n = 0;
        for (const auto& t : docs[r].tokens) n += t == v.term(c) ? 1 : 0;
        ASSERT_EQ(m.at(r, c), n);
      }
  }
}

TEST(Tfidf, HandComputedWeight) {
  auto docs = docs_of({{"a"}, {"a", "b"}});
  auto v = build_vocabulary(docs);
  auto w = tfidf(vectorize_counts(docs, v), v);
  EXPECT_NEAR(w.at(1, *v.find("b")), 0.6931, 1e-4);
  EXPECT_DOUBLE_EQ(w.at(1, *v.find("b")), std::log(2.0));
  // "a" is in every document.
  EXPECT_EQ(w.at(0, *v.find("a")), 0.0);
  EXPECT_EQ(w.at(1, *v.find("a")), 0.0);
}

TEST(Tfidf, LinearInTermFrequency) {
  auto docs = docs_of({{"a", "b"}, {"b", "c"}, {"c"}});
  auto v = build_vocabulary(docs);
  auto base = tfidf(vectorize_counts(docs, v), v);
  auto tripled = docs;
  tripled[0].tokens = {"a", "a", "a", "b", "b", "b"};
  auto scaled = tfidf(vectorize_counts(tripled, v), v);
  for (std::size_t c = 0; c < v.size(); ++c) EXPECT_DOUBLE_EQ(scaled.at(0, c), 3.0 * base.at(0, c));
}

TEST(Tfidf, RequiresCountInput) {
  auto docs = docs_of({{"a"}, {"b"}});
  auto v = build_vocabulary(docs);
  auto w = tfidf(vectorize_counts(docs, v), v);
  EXPECT_THROW(tfidf(w, v), Error);
}

TEST(TermScores, SingleDocIsAllZeroAndLexicographic) {
  auto docs = docs_of({{"zeta", "alpha", "mid"}});
  auto s = corpus_term_scores(docs, build_vocabulary(docs));
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].term, "alpha");
  EXPECT_EQ(s[1].term, "mid");
  EXPECT_EQ(s[2].term, "zeta");
  for (const auto& t : s) EXPECT_EQ(t.score, 0.0);
}

TEST(TermScores, MatchesBruteForceSummation) {
  auto docs = docs_of({{"a"}, {"a", "b"}, {"b"}, {"c"}});
  auto v = build_vocabulary(docs);
  auto s = corpus_term_scores(docs, v);
  const double n = 4.0;
  std::map<std::string, double> oracle;
  for (const std::string t : {"a", "b", "c"}) {
    double df = 0;
    for (const auto& d : docs) df += std::count(d.tokens.begin(), d.tokens.end(), t) > 0 ? 1 : 0;
    for (const auto& d : docs) oracle[t] += std::count(d.tokens.begin(), d.tokens.end(), t) * std::log(n / df);
  }
  // c: ln 4 once; a and b: 2 * ln 2 each, tie broken a < b.
  ASSERT_EQ(s.size(), 3u);
  for (const auto& t : s) EXPECT_NEAR(t.score, oracle[t.term], 1e-12);
  EXPECT_EQ(s[0].term, "a");
  EXPECT_EQ(s[1].term, "b");
  EXPECT_EQ(s[2].term, "c");
}

TEST(TermScores, DuplicateDocNeverLowersScoresOfAbsentTerms) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto docs = random_corpus(seed, 12, 8, 5);
    auto dup = docs;
    dup.push_back(docs[0]);
    dup.back().work_order_id = "dup";
    std::set<std::string> present(docs[0].tokens.begin(), docs[0].tokens.end());
    auto scores = [&](const std::vector<TokenDoc>& d) {
      std::map<std::string, double> out;
      for (const auto& ts : corpus_term_scores(d, build_vocabulary(d))) out[ts.term] = ts.score;
      return out;
    };
    auto before = scores(docs), after = scores(dup);
    for (const auto& [term, s] : before)
      if (!present.count(term)) {
        EXPECT_GE(after[term], s) << "seed " << seed << " term " << term;
      }
  }
}

TEST(TermScores, DuplicateDocCanReorderAbsentTerms) {
  // x: tf 1, df 1; y: tf 3, df 3. Scores ln N vs 3 ln(N/3) cross near
  // N = 5.2, so duplicating a doc without x or y flips their order.
  auto docs = docs_of({{"x"}, {"y"}, {"y"}, {"y"}, {"p"}});
  auto rank = [](const std::vector<TokenDoc>& d) {
    auto s = corpus_term_scores(d, build_vocabulary(d));
    std::vector<std::string> order;
    for (const auto& t : s)
      if (t.term == "x" || t.term == "y") order.push_back(t.term);
    return order;
  };
  EXPECT_EQ(rank(docs), (std::vector<std::string>{"x", "y"}));
  docs.push_back(docs[4]);
  docs.back().work_order_id = "dup";
  EXPECT_EQ(rank(docs), (std::vector<std::string>{"y", "x"}));
}

TEST(TermScores, MaxAndMeanAggregates) {
  auto docs = docs_of({{"a", "a"}, {"b"}, {"c"}});
  auto v = build_vocabulary(docs);
  auto mx = corpus_term_scores(docs, v, TermAggregate::max);
  auto mean = corpus_term_scores(docs, v, TermAggregate::mean);
  EXPECT_DOUBLE_EQ(mx[0].score, 2.0 * std::log(3.0));
  EXPECT_EQ(mean[0].term, "a");
  EXPECT_DOUBLE_EQ(mean[0].score, 2.0 * std::log(3.0) / 3.0);
}
