#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mwo/classify/dataset.hpp"
#include "mwo/error.hpp"
#include "mwo/rng.hpp"

namespace mwo::classify {

enum class Oversampler { none, random, smote };

inline const char* to_string(Oversampler o) {
  switch (o) {
    case Oversampler::none: return "none";
    case Oversampler::random: return "ro";
    case Oversampler::smote: return "smote";
  }
  return "none";
}

inline Oversampler parse_oversampler(std::string_view s) {
  if (s == "none") return Oversampler::none;
  if (s == "ro" || s == "random") return Oversampler::random;
  if (s == "smote") return Oversampler::smote;
  throw Error("unknown oversampler: " + std::string(s));
}

// Provenance of one appended row: a copy of `base` (random oversampling) or
// base + u * (neighbor - base) (SMOTE).
struct SyntheticOrigin {
  std::size_t base;
  std::size_t neighbor;
  double u;
};

struct Oversampled {
  Partition data;  // original rows first, in order, then synthetic rows
  std::vector<SyntheticOrigin> synthetic;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::map<ZeusCode, std::vector<std::size_t>> rows_by_class(const Partition& p) {
  std::map<ZeusCode, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < p.labels.size(); ++i) out[p.labels[i]].push_back(i);
  return out;
}

inline std::size_t majority(const std::map<ZeusCode, std::vector<std::size_t>>& by_class) {
  std::size_t m = 0;
  for (const auto& [c, rows] : by_class) m = std::max(m, rows.size());
  return m;
}

inline double squared_distance(const SparseRow& a, const SparseRow& b) {
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].column < b[j].column)) {
      d += a[i].weight * a[i].weight;
      ++i;
    } else if (i == a.size() || b[j].column < a[i].column) {
      d += b[j].weight * b[j].weight;
      ++j;
    } else {
      double diff = a[i].weight - b[j].weight;
      d += diff * diff;
      ++i;
      ++j;
    }
  }
  return d;
}

}  // namespace detail

// base + u * (neighbor - base) over the union of both supports.
inline SparseRow interpolate(const SparseRow& base, const SparseRow& neighbor, double u) {
  SparseRow out;
  std::size_t i = 0, j = 0;
  while (i < base.size() || j < neighbor.size()) {
    std::uint32_t col;
    double a = 0.0, b = 0.0;
    if (j == neighbor.size() || (i < base.size() && base[i].column < neighbor[j].column)) {
      col = base[i].column;
      a = base[i++].weight;
    } else if (i == base.size() || neighbor[j].column < base[i].column) {
      col = neighbor[j].column;
      b = neighbor[j++].weight;
    } else {
      col = base[i].column;
      a = base[i++].weight;
      b = neighbor[j++].weight;
    }
    double w = a + u * (b - a);
    if (w != 0.0) out.push_back({col, w});
  }
  return out;
}

// Duplicates random rows of every minority class (with replacement) until
// each class matches the majority count.
inline Oversampled oversample_random(const Partition& train, std::uint64_t seed) {
  if (train.size() == 0) throw Error("cannot oversample an empty partition");
  Oversampled out{train, {}, {}};
  auto by_class = detail::rows_by_class(train);
  std::size_t target = detail::majority(by_class);
  Rng rng(seed);
  for (const auto& [cls, rows] : by_class) {
    for (std::size_t k = rows.size(); k < target; ++k) {
      std::size_t src = rows[rng.below(rows.size())];
      out.data.features.append_row(train.features.row(src));
      out.data.labels.push_back(cls);
      out.synthetic.push_back({src, src, 0.0});
    }
  }
  return out;
}

// SMOTE: synthetic row = x_i + u * (x_nn - x_i), x_i drawn uniformly from the
// class, x_nn uniformly from its k nearest same-class neighbours (Euclidean,
// ties by row index), u ~ U[0,1). Single-sample classes fall back to
// duplication.
inline Oversampled oversample_smote(const Partition& train, std::size_t k_neighbors, std::uint64_t seed) {
  if (k_neighbors < 1) throw Error("SMOTE requires k_neighbors >= 1");
  if (train.size() == 0) throw Error("cannot oversample an empty partition");
  Oversampled out{train, {}, {}};
  auto by_class = detail::rows_by_class(train);
  std::size_t target = detail::majority(by_class);
  Rng rng(seed);
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() >= target) continue;
    if (rows.size() < 2) {
      out.warnings.push_back("class " + std::string(cls.code()) +
                             " has a single sample; SMOTE falls back to duplication");
      for (std::size_t k = rows.size(); k < target; ++k) {
        out.data.features.append_row(train.features.row(rows[0]));
        out.data.labels.push_back(cls);
        out.synthetic.push_back({rows[0], rows[0], 0.0});
      }
      continue;
    }
    std::size_t k = std::min(k_neighbors, rows.size() - 1);
    std::vector<std::vector<std::size_t>> neighbors(rows.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(rows.size() - 1);
      for (std::size_t b = 0; b < rows.size(); ++b)
        if (a != b) dist.emplace_back(detail::squared_distance(train.features.row(rows[a]), train.features.row(rows[b])), b);
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t n = 0; n < k; ++n) neighbors[a].push_back(dist[n].second);
    }
    for (std::size_t made = rows.size(); made < target; ++made) {
      std::size_t a = rng.below(rows.size());
      std::size_t b = neighbors[a][rng.below(k)];
      double u = rng.uniform();
      out.data.features.append_row(interpolate(train.features.row(rows[a]), train.features.row(rows[b]), u));
      out.data.labels.push_back(cls);
      out.synthetic.push_back({rows[a], rows[b], u});
    }
  }
  return out;
}

inline Oversampled oversample(const Partition& train, Oversampler kind, std::uint64_t seed, std::size_t k_neighbors = 5) {
  switch (kind) {
    case Oversampler::random: return oversample_random(train, seed);
    case Oversampler::smote: return oversample_smote(train, k_neighbors, seed);
    case Oversampler::none: break;
  }
  return Oversampled{train, {}, {}};
}

}  // namespace mwo::classify
