#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "mwo/classify/dataset.hpp"
#include "mwo/classify/prediction.hpp"
#include "mwo/error.hpp"

namespace mwo::classify {

// Multinomial naive Bayes with additive (Laplace) smoothing.
struct NaiveBayesModel {
  std::vector<ZeusCode> classes;                        // lexicographic
  std::vector<double> class_log_prior;                  // [class]
  std::vector<std::vector<double>> term_log_likelihood; // [class][term]
  double smoothing_alpha = 1.0;

  std::size_t n_terms() const { return term_log_likelihood.empty() ? 0 : term_log_likelihood.front().size(); }

  // Unnormalized joint log-likelihood per class.
  std::vector<double> joint_log_likelihood(const SparseRow& row) const {
    std::vector<double> out = class_log_prior;
    for (std::size_t c = 0; c < classes.size(); ++c)
      for (const auto& e : row) out[c] += e.weight * term_log_likelihood[c][e.column];
    return out;
  }

  Prediction predict_row(const SparseRow& row) const {
    return Prediction::from_scores(classes, joint_log_likelihood(row));
  }
};

inline NaiveBayesModel train_nb(const Partition& train, double alpha, const std::vector<ZeusCode>& classes) {
  if (!(alpha > 0.0)) throw Error("naive Bayes smoothing alpha must be > 0");
  if (train.features.weighting() != Weighting::count) throw Error("naive Bayes expects count features");
  if (classes.empty()) throw Error("naive Bayes needs at least one class");

  std::map<ZeusCode, std::size_t> position;
  for (std::size_t c = 0; c < classes.size(); ++c) position.emplace(classes[c], c);
  const std::size_t n_terms = train.features.n_cols();

  std::vector<double> class_rows(classes.size(), 0.0);
  std::vector<std::vector<double>> term_counts(classes.size(), std::vector<double>(n_terms, 0.0));
  for (std::size_t r = 0; r < train.size(); ++r) {
    auto it = position.find(train.labels[r]);
    if (it == position.end()) throw Error("training label outside the model class set: " + std::string(train.labels[r].code()));
    class_rows[it->second] += 1.0;
    for (const auto& e : train.features.row(r)) term_counts[it->second][e.column] += e.weight;
  }

  NaiveBayesModel m;
  m.classes = classes;
  m.smoothing_alpha = alpha;
  const double n_rows = static_cast<double>(train.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (class_rows[c] == 0.0)
      throw Error("class absent from training partition: " + std::string(classes[c].code()), ErrorKind::validation,
                  {{"class", std::string(classes[c].code())}});
    m.class_log_prior.push_back(std::log(class_rows[c] / n_rows));
    double total = 0.0;
    for (double v : term_counts[c]) total += v;
    const double denom = std::log(total + alpha * static_cast<double>(n_terms));
    std::vector<double> ll(n_terms);
    for (std::size_t t = 0; t < n_terms; ++t) ll[t] = std::log(term_counts[c][t] + alpha) - denom;
    m.term_log_likelihood.push_back(std::move(ll));
  }
  return m;
}

inline NaiveBayesModel train_nb(const Partition& train, double alpha) { return train_nb(train, alpha, train.classes()); }

}  // namespace mwo::classify
