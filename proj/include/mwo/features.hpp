#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mwo/corpus.hpp"
#include "mwo/error.hpp"

namespace mwo {

enum class Weighting { count, tfidf };

inline const char* to_string(Weighting w) { return w == Weighting::count ? "count" : "tfidf"; }

// idf variants. `plain` is ln(N/df) with no smoothing; `smooth` is
// ln((1+N)/(1+df)) + 1 for callers that want strictly positive weights.
enum class IdfVariant { plain, smooth };

inline const char* to_string(IdfVariant v) { return v == IdfVariant::plain ? "plain" : "smooth"; }

inline IdfVariant parse_idf_variant(std::string_view s) {
  if (s == "plain") return IdfVariant::plain;
  if (s == "smooth") return IdfVariant::smooth;
  throw Error("unknown idf variant: " + std::string(s));
}

class FeatureVocabulary {
 public:
  FeatureVocabulary() = default;

  // Terms must be distinct and sorted; df[i] >= 1.
  FeatureVocabulary(std::vector<std::string> terms, std::vector<std::size_t> df, std::size_t n_docs)
      : terms_(std::move(terms)), df_(std::move(df)), n_docs_(n_docs) {
    if (terms_.size() != df_.size()) throw Error("vocabulary terms/df size mismatch");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (df_[i] == 0) throw Error("vocabulary term with zero document frequency: " + terms_[i]);
      if (i && !(terms_[i - 1] < terms_[i])) throw Error("vocabulary terms must be strictly increasing");
      index_.emplace(terms_[i], i);
    }
  }

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  std::size_t n_docs() const { return n_docs_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::string& term(std::size_t i) const { return terms_.at(i); }
  std::size_t document_frequency(std::size_t i) const { return df_.at(i); }

  std::optional<std::size_t> find(const std::string& term) const {
    auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double idf(std::size_t i, IdfVariant variant = IdfVariant::plain) const {
    double n = static_cast<double>(n_docs_);
    double df = static_cast<double>(df_[i]);
    if (variant == IdfVariant::smooth) return std::log((1.0 + n) / (1.0 + df)) + 1.0;
    return std::log(n / df);
  }

  friend bool operator==(const FeatureVocabulary& a, const FeatureVocabulary& b) {
    return a.terms_ == b.terms_ && a.df_ == b.df_ && a.n_docs_ == b.n_docs_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

inline void to_json(nlohmann::json& j, const FeatureVocabulary& v) {
  j = {{"n_docs", v.n_docs()}, {"terms", nlohmann::json::array()}};
  for (std::size_t i = 0; i < v.size(); ++i)
    j["terms"].push_back({{"term", v.term(i)}, {"index", i}, {"df", v.document_frequency(i)}});
}

inline void from_json(const nlohmann::json& j, FeatureVocabulary& v) {
  std::vector<std::string> terms;
  std::vector<std::size_t> df;
  for (const auto& e : j.at("terms")) {
    if (e.at("index").get<std::size_t>() != terms.size()) throw Error("vocabulary JSON indices are not 0..n-1 in order");
    terms.push_back(e.at("term").get<std::string>());
    df.push_back(e.at("df").get<std::size_t>());
  }
  v = FeatureVocabulary(std::move(terms), std::move(df), j.at("n_docs").get<std::size_t>());
}

inline FeatureVocabulary build_vocabulary(const std::vector<TokenDoc>& docs, std::size_t min_df = 1) {
  if (docs.empty()) throw Error("cannot build a vocabulary from an empty document set");
  if (min_df < 1) throw Error("min_df must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    std::set<std::string_view> seen(d.tokens.begin(), d.tokens.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  std::vector<std::string> terms;
  std::vector<std::size_t> counts;
  for (auto& [term, n] : df) {
    if (n < min_df) continue;
    terms.push_back(term);
    counts.push_back(n);
  }
  return FeatureVocabulary(std::move(terms), std::move(counts), docs.size());
}

struct SparseEntry {
  std::uint32_t column;
  double weight;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

using SparseRow = std::vector<SparseEntry>;  // sorted by column, no zero weights

class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<SparseRow> rows, std::size_t n_cols, Weighting weighting)
      : rows_(std::move(rows)), n_cols_(n_cols), weighting_(weighting) {}

  std::size_t n_rows() const { return rows_.size(); }
  std::size_t n_cols() const { return n_cols_; }
  Weighting weighting() const { return weighting_; }
  const SparseRow& row(std::size_t i) const { return rows_.at(i); }
  const std::vector<SparseRow>& rows() const { return rows_; }

  double at(std::size_t r, std::size_t c) const {
    const auto& row = rows_.at(r);
    auto it = std::lower_bound(row.begin(), row.end(), c, [](const SparseEntry& e, std::size_t col) { return e.column < col; });
    return (it != row.end() && it->column == c) ? it->weight : 0.0;
  }

  std::vector<double> dense_row(std::size_t r) const {
    std::vector<double> out(n_cols_, 0.0);
    for (const auto& e : rows_.at(r)) out[e.column] = e.weight;
    return out;
  }

  // Rows with no in-vocabulary token.
  std::vector<std::size_t> zero_rows() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < rows_.size(); ++i)
      if (rows_[i].empty()) out.push_back(i);
    return out;
  }

  FeatureMatrix select_rows(const std::vector<std::size_t>& idx) const {
    std::vector<SparseRow> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(rows_.at(i));
    return {std::move(out), n_cols_, weighting_};
  }

  void append_row(SparseRow row) { rows_.push_back(std::move(row)); }

 private:
  std::vector<SparseRow> rows_;
  std::size_t n_cols_ = 0;
  Weighting weighting_ = Weighting::count;
};

inline SparseRow count_row(const std::vector<std::string>& tokens, const FeatureVocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : tokens)
    if (auto i = vocab.find(t)) counts[static_cast<std::uint32_t>(*i)] += 1.0;
  SparseRow row;
  row.reserve(counts.size());
  for (auto [c, w] : counts) row.push_back({c, w});
  return row;
}

// Out-of-vocabulary tokens are ignored; a document made only of OOV tokens
// yields an empty row (see FeatureMatrix::zero_rows).
inline FeatureMatrix vectorize_counts(const std::vector<TokenDoc>& docs, const FeatureVocabulary& vocab) {
  std::vector<SparseRow> rows;
  rows.reserve(docs.size());
  for (const auto& d : docs) rows.push_back(count_row(d.tokens, vocab));
  return {std::move(rows), vocab.size(), Weighting::count};
}

// weight(d,t) = tf(d,t) * idf(t), tf the raw count. N and df come from the
// vocabulary (the corpus the vocabulary was fit on).
inline FeatureMatrix tfidf(const FeatureMatrix& counts, const FeatureVocabulary& vocab,
                           IdfVariant variant = IdfVariant::plain) {
  if (counts.weighting() != Weighting::count) throw Error("tfidf expects a count-weighted matrix");
  if (counts.n_cols() != vocab.size()) throw Error("matrix/vocabulary size mismatch");
  std::vector<double> idf(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) idf[i] = vocab.idf(i, variant);
  std::vector<SparseRow> rows;
  rows.reserve(counts.n_rows());
  for (const auto& r : counts.rows()) {
    SparseRow out;
    for (const auto& e : r) {
      double w = e.weight * idf[e.column];
      if (w != 0.0) out.push_back({e.column, w});
    }
    rows.push_back(std::move(out));
  }
  return {std::move(rows), counts.n_cols(), Weighting::tfidf};
}

enum class TermAggregate { sum, max, mean };

inline const char* to_string(TermAggregate a) {
  switch (a) {
    case TermAggregate::sum: return "sum";
    case TermAggregate::max: return "max";
    case TermAggregate::mean: return "mean";
  }
  return "sum";
}

inline TermAggregate parse_term_aggregate(std::string_view s) {
  if (s == "sum") return TermAggregate::sum;
  if (s == "max") return TermAggregate::max;
  if (s == "mean") return TermAggregate::mean;
  throw Error("unknown term aggregate: " + std::string(s));
}

struct TermScore {
  std::string term;
  double score;
  std::size_t index;
};

// Corpus-level term ranking: per-term aggregate of the TF-IDF column, sorted
// by descending score with lexicographic tie-break. This is the tagging queue
// order. `mean` divides by the number of documents.
inline std::vector<TermScore> corpus_term_scores(const std::vector<TokenDoc>& docs, const FeatureVocabulary& vocab,
                                                 TermAggregate aggregate = TermAggregate::sum,
                                                 IdfVariant variant = IdfVariant::plain) {
  auto weights = tfidf(vectorize_counts(docs, vocab), vocab, variant);
  std::vector<double> score(vocab.size(), 0.0);
  for (const auto& row : weights.rows())
    for (const auto& e : row) {
      if (aggregate == TermAggregate::max)
        score[e.column] = std::max(score[e.column], e.weight);
      else
        score[e.column] += e.weight;
    }
  if (aggregate == TermAggregate::mean && !docs.empty())
    for (auto& s : score) s /= static_cast<double>(docs.size());

  std::vector<TermScore> ranked;
  ranked.reserve(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) ranked.push_back({vocab.term(i), score[i], i});
  std::stable_sort(ranked.begin(), ranked.end(), [](const TermScore& a, const TermScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
  return ranked;
}

}  // namespace mwo
