#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mwo/corpus.hpp"
#include "mwo/error.hpp"
#include "mwo/features.hpp"
#include "mwo/rng.hpp"
#include "mwo/zeus.hpp"

namespace mwo::classify {

// Rows of a feature matrix with one level-3 label each.
struct Partition {
  FeatureMatrix features;
  std::vector<ZeusCode> labels;

  std::size_t size() const { return labels.size(); }

  std::map<ZeusCode, std::size_t> class_counts() const {
    std::map<ZeusCode, std::size_t> counts;
    for (auto c : labels) ++counts[c];
    return counts;
  }

  std::vector<ZeusCode> classes() const {
    std::vector<ZeusCode> out;
    for (auto& [c, n] : class_counts()) out.push_back(c);
    return out;
  }
};

struct LabeledDataset {
  FeatureMatrix features;
  std::vector<ZeusCode> labels;  // truncated to level 3
  std::vector<std::string> ids;
  std::uint64_t split_seed = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;

  Partition partition(const std::vector<std::size_t>& rows) const {
    Partition p{features.select_rows(rows), {}};
    p.labels.reserve(rows.size());
    for (auto r : rows) p.labels.push_back(labels.at(r));
    return p;
  }
  Partition train_partition() const { return partition(train); }
  Partition test_partition() const { return partition(test); }
};

// Joins token docs with their work orders and keeps labeled rows only.
inline LabeledDataset make_labeled_dataset(const std::vector<TokenDoc>& docs, const std::vector<WorkOrder>& orders,
                                           FeatureMatrix features) {
  if (features.n_rows() != docs.size()) throw Error("feature rows do not match documents");
  std::unordered_map<std::string, const WorkOrder*> by_id;
  for (const auto& o : orders) by_id.emplace(o.id, &o);

  LabeledDataset ds;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    auto it = by_id.find(docs[i].work_order_id);
    if (it == by_id.end()) throw Error("token doc without work order: " + docs[i].work_order_id);
    if (!it->second->zeus_code) continue;
    keep.push_back(i);
    ds.labels.push_back(it->second->zeus_code->level3());
    ds.ids.push_back(docs[i].work_order_id);
  }
  ds.features = features.select_rows(keep);
  return ds;
}

// Per-class proportional split: each class contributes round(n_c * fraction)
// rows to test, chosen by a seeded shuffle. Classes with fewer than two rows
// stay entirely in train.
inline void stratified_split(LabeledDataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test_fraction must lie in (0, 1)");
  ds.split_seed = seed;
  ds.train.clear();
  ds.test.clear();
  ds.warnings.clear();

  std::map<ZeusCode, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) by_class[ds.labels[i]].push_back(i);

  Rng rng(seed);
  for (auto& [cls, rows] : by_class) {
    if (rows.size() < 2) {
      ds.warnings.push_back("class " + std::string(cls.code()) + " has " + std::to_string(rows.size()) +
                            " sample(s); routed entirely to train");
      ds.train.insert(ds.train.end(), rows.begin(), rows.end());
      continue;
    }
    rng.shuffle(rows);
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    ds.test.insert(ds.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    ds.train.insert(ds.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
}

}  // namespace mwo::classify
