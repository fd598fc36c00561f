#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwo/error.hpp"
#include "mwo/zeus.hpp"

namespace mwo::classify {

struct ClassScores {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double support = 0.0;  // absolute count or fraction; only ratios matter
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricsReport {
  std::vector<std::string> classes;             // confusion axis order
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<ClassScores> per_class;           // retained classes only
  Averages macro_avg;
  Averages weighted_avg;
  std::vector<std::string> dropped_classes;
  double accuracy = 0.0;                        // over all rows
  std::size_t n = 0;
};

// Macro = unweighted mean over the given rows; weighted = mean with weights
// support / sum(support).
inline std::pair<Averages, Averages> aggregate(const std::vector<ClassScores>& rows) {
  Averages macro, weighted;
  if (rows.empty()) return {macro, weighted};
  double total = 0.0;
  for (const auto& r : rows) total += r.support;
  for (const auto& r : rows) {
    macro.precision += r.precision;
    macro.recall += r.recall;
    macro.f1 += r.f1;
    double w = total > 0.0 ? r.support / total : 0.0;
    weighted.precision += w * r.precision;
    weighted.recall += w * r.recall;
    weighted.f1 += w * r.f1;
  }
  const double k = static_cast<double>(rows.size());
  macro.precision /= k;
  macro.recall /= k;
  macro.f1 /= k;
  return {macro, weighted};
}

// Classes with truth support below `min_class_support`, or never predicted
// (precision undefined), are excluded from the averages and listed in
// dropped_classes.
inline MetricsReport evaluate(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                              std::size_t min_class_support = 1) {
  if (predicted.size() != truth.size()) throw Error("prediction and truth lengths differ");
  if (truth.empty()) throw Error("cannot evaluate an empty prediction set");

  std::set<std::string> labels(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());
  MetricsReport rep;
  rep.n = truth.size();
  rep.classes.assign(labels.begin(), labels.end());
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < rep.classes.size(); ++i) pos[rep.classes[i]] = i;
  const std::size_t k = rep.classes.size();
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++rep.confusion[pos[truth[i]]][pos[predicted[i]]];

  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += rep.confusion[c][c];
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.n);

  for (std::size_t c = 0; c < k; ++c) {
    std::size_t support = 0, predicted_count = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += rep.confusion[c][j];
      predicted_count += rep.confusion[j][c];
    }
    if (support < min_class_support || support == 0 || predicted_count == 0) {
      rep.dropped_classes.push_back(rep.classes[c]);
      continue;
    }
    ClassScores s;
    s.label = rep.classes[c];
    const double tp = static_cast<double>(rep.confusion[c][c]);
    s.precision = tp / static_cast<double>(predicted_count);
    s.recall = tp / static_cast<double>(support);
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    s.support = static_cast<double>(support);
    rep.per_class.push_back(s);
  }
  std::tie(rep.macro_avg, rep.weighted_avg) = aggregate(rep.per_class);
  return rep;
}

inline std::vector<std::string> codes(const std::vector<ZeusCode>& labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (auto l : labels) out.emplace_back(l.code());
  return out;
}

inline void to_json(nlohmann::json& j, const Averages& a) {
  j = {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}};
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
  double total = 0.0;
  for (const auto& c : r.per_class) total += c.support;
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : r.per_class)
    per_class.push_back({{"class", c.label},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1},
                         {"support", c.support},
                         {"support_fraction", total > 0 ? c.support / total : 0.0}});
  j = {{"n", r.n},
       {"accuracy", r.accuracy},
       {"classes", r.classes},
       {"confusion", r.confusion},
       {"per_class", per_class},
       {"macro_avg", r.macro_avg},
       {"weighted_avg", r.weighted_avg},
       {"dropped_classes", r.dropped_classes}};
}

namespace detail {
inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

// Per-class table: class, precision, recall, F1, support fraction, followed
// by the macro and weighted average rows.
inline std::string render_class_table(const MetricsReport& r) {
  double total = 0.0;
  for (const auto& c : r.per_class) total += c.support;
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s\n", "ZEUS_02-08", "Precision", "Recall", "F1-Score", "Support");
  out << line;
  for (const auto& c : r.per_class) {
    std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s\n", c.label.c_str(), detail::fixed2(c.precision).c_str(),
                  detail::fixed2(c.recall).c_str(), detail::fixed2(c.f1).c_str(),
                  detail::fixed2(total > 0 ? c.support / total : 0.0).c_str());
    out << line;
  }
  auto avg_row = [&](const char* name, const Averages& a) {
    std::snprintf(line, sizeof line, "%-14s %9s %9s %9s %9s\n", name, detail::fixed2(a.precision).c_str(),
                  detail::fixed2(a.recall).c_str(), detail::fixed2(a.f1).c_str(), "1.00");
    out << line;
  };
  avg_row("Macro Avg", r.macro_avg);
  avg_row("Weighted Avg", r.weighted_avg);
  if (!r.dropped_classes.empty()) {
    out << "dropped:";
    for (const auto& d : r.dropped_classes) out << ' ' << d;
    out << '\n';
  }
  return out.str();
}

// Model comparison table: one macro and one weighted row per model.
inline std::string render_model_table(const std::vector<std::pair<std::string, MetricsReport>>& models) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %-13s %9s %9s %9s\n", "Classifier", "", "Precision", "Recall", "F1-Score");
  out << line;
  for (const auto& [name, r] : models) {
    std::snprintf(line, sizeof line, "%-10s %-13s %9s %9s %9s\n", name.c_str(), "Macro Avg",
                  detail::fixed2(r.macro_avg.precision).c_str(), detail::fixed2(r.macro_avg.recall).c_str(),
                  detail::fixed2(r.macro_avg.f1).c_str());
    out << line;
    std::snprintf(line, sizeof line, "%-10s %-13s %9s %9s %9s\n", "", "Weighted Avg",
                  detail::fixed2(r.weighted_avg.precision).c_str(), detail::fixed2(r.weighted_avg.recall).c_str(),
                  detail::fixed2(r.weighted_avg.f1).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace mwo::classify
