#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "mwo/classify/dataset.hpp"
#include "mwo/classify/prediction.hpp"
#include "mwo/error.hpp"

namespace mwo::classify {

struct LogisticRegressionModel {
  std::vector<ZeusCode> classes;             // lexicographic
  std::vector<std::vector<double>> weights;  // [class][term]
  std::vector<double> bias;                  // [class]
  double l2_lambda = 0.0;
  std::vector<double> training_trace;        // loss per epoch, starting at the initial weights

  std::size_t n_terms() const { return weights.empty() ? 0 : weights.front().size(); }

  std::vector<double> scores(const SparseRow& row) const {
    std::vector<double> s = bias;
    for (std::size_t c = 0; c < classes.size(); ++c)
      for (const auto& e : row) s[c] += weights[c][e.column] * e.weight;
    return s;
  }

  Prediction predict_row(const SparseRow& row) const { return Prediction::from_scores(classes, scores(row)); }
};

struct LrOptions {
  double l2_lambda = 1e-4;
  double learning_rate = 0.5;
  std::size_t max_epochs = 500;
  double tol = 1e-7;
};

struct LossGradient {
  double loss = 0.0;
  std::vector<std::vector<double>> d_weights;
  std::vector<double> d_bias;
};

// Mean cross-entropy + (lambda/2) * ||W||^2 (bias unregularized) and its
// gradient. `label_index[r]` is the class position of row r.
inline LossGradient loss_and_gradient(const LogisticRegressionModel& m, const FeatureMatrix& x,
                                      const std::vector<std::size_t>& label_index) {
  const std::size_t k = m.classes.size();
  const std::size_t v = m.n_terms();
  const double n = static_cast<double>(x.n_rows());
  LossGradient g;
  g.d_weights.assign(k, std::vector<double>(v, 0.0));
  g.d_bias.assign(k, 0.0);

  double ce = 0.0;
  for (std::size_t r = 0; r < x.n_rows(); ++r) {
    const auto& row = x.row(r);
    auto s = m.scores(row);
    double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double si : s) z += std::exp(si - top);
    const double log_z = top + std::log(z);
    ce += log_z - s[label_index[r]];
    for (std::size_t c = 0; c < k; ++c) {
      double residual = std::exp(s[c] - log_z) - (c == label_index[r] ? 1.0 : 0.0);
      g.d_bias[c] += residual / n;
      for (const auto& e : row) g.d_weights[c][e.column] += residual * e.weight / n;
    }
  }
  double sq = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t t = 0; t < v; ++t) {
      sq += m.weights[c][t] * m.weights[c][t];
      g.d_weights[c][t] += m.l2_lambda * m.weights[c][t];
    }
  g.loss = ce / n + 0.5 * m.l2_lambda * sq;
  return g;
}

inline std::vector<std::size_t> label_positions(const std::vector<ZeusCode>& classes, const std::vector<ZeusCode>& labels) {
  std::map<ZeusCode, std::size_t> position;
  for (std::size_t c = 0; c < classes.size(); ++c) position.emplace(classes[c], c);
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (auto l : labels) {
    auto it = position.find(l);
    if (it == position.end()) throw Error("label outside the model class set: " + std::string(l.code()));
    out.push_back(it->second);
  }
  return out;
}

// Full-batch gradient descent from zero weights. Stops when the loss
// improvement drops below `tol` or after `max_epochs` updates.
inline LogisticRegressionModel train_lr(const Partition& train, const LrOptions& opt, const std::vector<ZeusCode>& classes) {
  if (opt.max_epochs < 1) throw Error("max_epochs must be >= 1");
  if (opt.l2_lambda < 0.0) throw Error("l2_lambda must be >= 0");
  if (train.size() == 0) throw Error("cannot train on an empty partition");
  auto labels = label_positions(classes, train.labels);
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (std::find(labels.begin(), labels.end(), c) == labels.end())
      throw Error("class absent from training partition: " + std::string(classes[c].code()));

  LogisticRegressionModel m;
  m.classes = classes;
  m.l2_lambda = opt.l2_lambda;
  m.weights.assign(classes.size(), std::vector<double>(train.features.n_cols(), 0.0));
  m.bias.assign(classes.size(), 0.0);

  auto g = loss_and_gradient(m, train.features, labels);
  m.training_trace.push_back(g.loss);
  for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      m.bias[c] -= opt.learning_rate * g.d_bias[c];
      for (std::size_t t = 0; t < m.weights[c].size(); ++t) m.weights[c][t] -= opt.learning_rate * g.d_weights[c][t];
    }
    double previous = g.loss;
    g = loss_and_gradient(m, train.features, labels);
    if (!std::isfinite(g.loss))
      throw Error("logistic regression diverged: non-finite loss", ErrorKind::internal,
                  {{"epoch", epoch + 1}, {"previous_loss", previous}, {"learning_rate", opt.learning_rate}});
    m.training_trace.push_back(g.loss);
    if (previous - g.loss < opt.tol) break;
  }
  return m;
}

inline LogisticRegressionModel train_lr(const Partition& train, const LrOptions& opt) {
  return train_lr(train, opt, train.classes());
}

}  // namespace mwo::classify
