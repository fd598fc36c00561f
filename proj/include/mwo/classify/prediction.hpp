#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mwo/zeus.hpp"

namespace mwo::classify {

struct Prediction {
  ZeusCode label;
  std::vector<double> probabilities;  // aligned with the model's class list

  // Softmax of `scores` via log-sum-exp; argmax ties go to the earliest class,
  // which is the lexicographically smallest code because class lists are
  // kept sorted.
  static Prediction from_scores(const std::vector<ZeusCode>& classes, const std::vector<double>& scores) {
    double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) sum += (p[i] = std::exp(scores[i] - top));
    for (double& v : p) v /= sum;
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    return {classes[best], std::move(p)};
  }
};

}  // namespace mwo::classify
