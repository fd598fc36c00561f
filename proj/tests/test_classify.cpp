#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "mwo/classify/model.hpp"
#include "mwo/rng.hpp"
#include "mwo/synth.hpp"

using namespace mwo;
using namespace mwo::classify;

namespace {

const ZeusCode A = ZeusCode::Id::corrective;
const ZeusCode B = ZeusCode::Id::preventive;
const ZeusCode C = ZeusCode::Id::unresolved;
const ZeusCode D = ZeusCode::Id::insignificant;

SparseRow sparse(const std::vector<double>& dense) {
  SparseRow r;
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0.0) r.push_back({static_cast<std::uint32_t>(i), dense[i]});
  return r;
}

Partition dense_partition(const std::vector<std::vector<double>>& rows, std::vector<ZeusCode> labels,
                          Weighting w = Weighting::count) {
  std::vector<SparseRow> sr;
  for (const auto& r : rows) sr.push_back(sparse(r));
  return {FeatureMatrix(std::move(sr), rows.empty() ? 0 : rows[0].size(), w), std::move(labels)};
}

Partition random_partition(std::uint64_t seed, std::size_t n, std::size_t v, const std::vector<ZeusCode>& classes,
                           Weighting w = Weighting::tfidf) {
  Rng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(v, 0.0));
  std::vector<ZeusCode> labels;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : rows[i])
      if (rng.uniform() < 0.4) x = w == Weighting::count ? static_cast<double>(1 + rng.below(3)) : 2.0 * rng.uniform();
    labels.push_back(classes[i % classes.size()]);
  }
  return dense_partition(rows, labels, w);
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Split

TEST(Split, ProportionalPerClass) {
  LabeledDataset ds;
  for (int i = 0; i < 60; ++i) ds.labels.push_back(A);
  for (int i = 0; i < 40; ++i) ds.labels.push_back(B);
  stratified_split(ds, 0.3, 11);
  std::map<ZeusCode, std::size_t> test;
  for (auto r : ds.test) ++test[ds.labels[r]];
  EXPECT_EQ(test[A], 18u);
  EXPECT_EQ(test[B], 12u);
  EXPECT_EQ(ds.train.size() + ds.test.size(), 100u);
}

TEST(Split, SingleSampleClassGoesToTrainWithWarning) {
  LabeledDataset ds;
  ds.labels = {A, A, A, A, B};
  stratified_split(ds, 0.3, 1);
  EXPECT_NE(std::find(ds.train.begin(), ds.train.end(), 4u), ds.train.end());
  ASSERT_EQ(ds.warnings.size(), 1u);
  EXPECT_NE(ds.warnings[0].find("02-08-02"), std::string::npos);
}

TEST(Split, SameSeedSamePartition) {
  LabeledDataset a, b;
  for (int i = 0; i < 50; ++i) a.labels.push_back(i % 3 ? A : B);
  b.labels = a.labels;
  stratified_split(a, 0.3, 99);
  stratified_split(b, 0.3, 99);
  EXPECT_EQ(a.test, b.test);
  LabeledDataset c;
  c.labels = a.labels;
  stratified_split(c, 0.3, 100);
  EXPECT_NE(a.test, c.test);
}

// ---------------------------------------------------------------------------
// Oversampling

TEST(RandomOversampling, MinorityCopiesExistingRows) {
  std::vector<std::vector<double>> rows;
  std::vector<ZeusCode> labels;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({double(i), 0});
    labels.push_back(A);
  }
  for (int i = 0; i < 3; ++i) {
    rows.push_back({0, double(100 + i)});
    labels.push_back(B);
  }
  auto p = dense_partition(rows, labels);
  auto o = oversample_random(p, 3);
  auto counts = o.data.class_counts();
  EXPECT_EQ(counts[A], 10u);
  EXPECT_EQ(counts[B], 10u);
  for (std::size_t r = p.size(); r < o.data.size(); ++r) {
    EXPECT_EQ(o.data.labels[r], B);
    const auto& row = o.data.features.row(r);
    bool is_copy = false;
    for (std::size_t s = 10; s < 13; ++s) is_copy |= row == p.features.row(s);
    EXPECT_TRUE(is_copy);
  }
}

TEST(RandomOversampling, BalancedInputIsUnchanged) {
  auto p = random_partition(2, 12, 5, {A, B, C});
  auto o = oversample_random(p, 1);
  EXPECT_EQ(o.data.features.rows(), p.features.rows());
  EXPECT_EQ(o.data.labels, p.labels);
}

TEST(RandomOversampling, ThreeClasses) {
  std::vector<ZeusCode> labels;
  for (int i = 0; i < 8; ++i) labels.push_back(A);
  for (int i = 0; i < 4; ++i) labels.push_back(B);
  for (int i = 0; i < 2; ++i) labels.push_back(C);
  auto p = dense_partition(std::vector<std::vector<double>>(14, {1.0}), labels);
  auto counts = oversample_random(p, 5).data.class_counts();
  EXPECT_EQ(counts[A], 8u);
  EXPECT_EQ(counts[B], 8u);
  EXPECT_EQ(counts[C], 8u);
}

TEST(Smote, InterpolationEndpoints) {
  SparseRow x{{0, 1.0}, {2, 3.0}}, y{{1, 5.0}, {2, 1.0}};
  EXPECT_EQ(interpolate(x, y, 0.0), x);
  EXPECT_EQ(interpolate(x, y, 1.0), y);
  EXPECT_EQ(interpolate(x, y, 0.5), (SparseRow{{0, 0.5}, {1, 2.5}, {2, 2.0}}));
}

TEST(Smote, IdenticalMinorityPointsYieldThatPoint) {
  auto p = dense_partition({{1, 1}, {2, 2}, {3, 3}, {4, 4}, {7, 9}, {7, 9}}, {A, A, A, A, B, B}, Weighting::tfidf);
  auto o = oversample_smote(p, 5, 4);
  for (std::size_t r = p.size(); r < o.data.size(); ++r) EXPECT_EQ(o.data.features.dense_row(r), (std::vector<double>{7, 9}));
}

TEST(Smote, ToySegmentOverManySeeds) {
  // Class B = {(0,0), (1,0)}, k = 1: every synthetic lies on y = 0, 0 <= x <= 1.
  auto p = dense_partition({{5, 5}, {6, 5}, {5, 6}, {6, 6}, {7, 7}, {0, 0}, {1, 0}}, {A, A, A, A, A, B, B}, Weighting::tfidf);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto o = oversample_smote(p, 1, seed);
    ASSERT_EQ(o.data.class_counts()[B], 5u);
    for (std::size_t r = p.size(); r < o.data.size(); ++r) {
      auto v = o.data.features.dense_row(r);
      EXPECT_EQ(v[1], 0.0);
      EXPECT_GE(v[0], 0.0);
      EXPECT_LE(v[0], 1.0);
    }
  }
}

TEST(Smote, SyntheticsAreConvexCombinationsOfSameClassOriginals) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto p = random_partition(seed, 20, 6, {A, A, A, B, C});
    auto o = oversample_smote(p, 3, seed);
    auto counts = o.data.class_counts();
    for (auto& [c, n] : counts) EXPECT_EQ(n, counts[A]);
    ASSERT_EQ(o.synthetic.size(), o.data.size() - p.size());
    for (std::size_t s = 0; s < o.synthetic.size(); ++s) {
      const auto& origin = o.synthetic[s];
      const std::size_t r = p.size() + s;
      EXPECT_EQ(p.labels[origin.base], o.data.labels[r]);
      EXPECT_EQ(p.labels[origin.neighbor], o.data.labels[r]);
      EXPECT_GE(origin.u, 0.0);
      EXPECT_LE(origin.u, 1.0);
      auto xi = p.features.dense_row(origin.base);
      auto xn = p.features.dense_row(origin.neighbor);
      auto xs = o.data.features.dense_row(r);
      for (std::size_t c = 0; c < xs.size(); ++c) {
        EXPECT_NEAR(xs[c], xi[c] + origin.u * (xn[c] - xi[c]), 1e-12);
        EXPECT_GE(xs[c], std::min(xi[c], xn[c]) - 1e-12);
        EXPECT_LE(xs[c], std::max(xi[c], xn[c]) + 1e-12);
      }
    }
  }
}

TEST(Smote, InvalidK) {
  auto p = random_partition(1, 6, 3, {A, B});
  EXPECT_THROW(oversample_smote(p, 0, 1), Error);
}

// ---------------------------------------------------------------------------
// Naive Bayes

TEST(NaiveBayes, IdenticalDocsGivePriorPosterior) {
  auto p = dense_partition({{1, 2, 0}, {1, 2, 0}, {1, 2, 0}, {1, 2, 0}}, {A, B, A, B});
  auto m = train_nb(p, 1.0);
  for (const auto& row : {sparse({0, 0, 5}), sparse({3, 0, 0}), sparse({1, 1, 1})}) {
    auto pr = m.predict_row(row);
    EXPECT_NEAR(pr.probabilities[0], 0.5, 1e-12);
    EXPECT_NEAR(pr.probabilities[1], 0.5, 1e-12);
  }
}

TEST(NaiveBayes, TwoClassHandComputation) {
  // A docs [x], B docs [y], alpha 1: P(x|A) = 2/3, P(x|B) = 1/3, priors 1/2.
  auto p = dense_partition({{1, 0}, {0, 1}}, {A, B});
  auto m = train_nb(p, 1.0);
  auto px = m.predict_row(sparse({1, 0}));
  EXPECT_NEAR(px.probabilities[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(px.probabilities[1], 1.0 / 3.0, 1e-12);
  // Doc [x, x, y]: A ∝ (2/3)^2 (1/3), B ∝ (1/3)^2 (2/3) -> 2/3 vs 1/3.
  auto pxxy = m.predict_row(sparse({2, 1}));
  EXPECT_NEAR(pxxy.probabilities[0], 2.0 / 3.0, 1e-12);
  EXPECT_EQ(pxxy.label, A);
}

TEST(NaiveBayes, DoublingDocsWithScaledAlphaLeavesModelUnchanged) {
  auto p = random_partition(3, 9, 5, {A, B, C}, Weighting::count);
  Partition doubled = p;
  for (std::size_t r = 0; r < p.size(); ++r) {
    doubled.features.append_row(p.features.row(r));
    doubled.labels.push_back(p.labels[r]);
  }
  auto m1 = train_nb(p, 1.0);
  auto m2 = train_nb(doubled, 2.0);
  for (std::size_t c = 0; c < m1.classes.size(); ++c) {
    EXPECT_NEAR(m1.class_log_prior[c], m2.class_log_prior[c], 1e-12);
    for (std::size_t t = 0; t < 5; ++t) EXPECT_NEAR(m1.term_log_likelihood[c][t], m2.term_log_likelihood[c][t], 1e-12);
  }
  auto m3 = train_nb(doubled, 1.0);
  for (std::size_t c = 0; c < m1.classes.size(); ++c) EXPECT_NEAR(m1.class_log_prior[c], m3.class_log_prior[c], 1e-12);
}

TEST(NaiveBayes, MemorizesOneDocPerClass) {
  auto p = dense_partition({{3, 0, 0, 1}, {0, 4, 0, 0}, {0, 0, 2, 2}}, {A, B, C});
  auto m = train_nb(p, 1.0);
  for (std::size_t r = 0; r < p.size(); ++r) EXPECT_EQ(m.predict_row(p.features.row(r)).label, p.labels[r]);
}

TEST(NaiveBayes, Guards) {
  auto p = random_partition(1, 6, 3, {A, B}, Weighting::count);
  EXPECT_THROW(train_nb(p, 0.0), Error);
  EXPECT_THROW(train_nb(p, 1.0, {A, B, C}), Error);
  auto tf = random_partition(1, 6, 3, {A, B}, Weighting::tfidf);
  EXPECT_THROW(train_nb(tf, 1.0), Error);
}

TEST(NaiveBayes, ProbabilitiesMatchDenseOracle) {
  auto p = random_partition(8, 5, 4, {A, B, C}, Weighting::count);
  auto m = train_nb(p, 0.5);
  for (std::size_t r = 0; r < p.size(); ++r) {
    auto x = p.features.dense_row(r);
    std::vector<double> joint(3);
    for (std::size_t c = 0; c < 3; ++c) {
      // Independent recomputation from raw counts.
      double nc = 0, total = 0;
      std::vector<double> tc(4, 0.0);
      for (std::size_t s = 0; s < p.size(); ++s) {
        if (p.labels[s] != m.classes[c]) continue;
        nc += 1;
        auto xs = p.features.dense_row(s);
        for (std::size_t t = 0; t < 4; ++t) tc[t] += xs[t];
      }
      for (double v : tc) total += v;
      joint[c] = std::log(nc / p.size());
      for (std::size_t t = 0; t < 4; ++t) joint[c] += x[t] * std::log((tc[t] + 0.5) / (total + 0.5 * 4));
    }
    double mx = *std::max_element(joint.begin(), joint.end()), z = 0;
    for (double j : joint) z += std::exp(j - mx);
    auto pr = m.predict_row(p.features.row(r));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(pr.probabilities[c], std::exp(joint[c] - mx) / z, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Logistic regression

TEST(Logistic, ZeroWeightsGiveUniformDistribution) {
  LogisticRegressionModel m;
  m.classes = {A, B, C, D};
  m.weights.assign(4, std::vector<double>(3, 0.0));
  m.bias.assign(4, 0.0);
  auto pr = m.predict_row(sparse({1, 2, 3}));
  for (double p : pr.probabilities) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Logistic, AllZeroRowPicksLargestBias) {
  LogisticRegressionModel m;
  m.classes = {A, B, C};
  m.weights.assign(3, std::vector<double>(2, 1.0));
  m.bias = {0.1, 0.7, -0.2};
  EXPECT_EQ(m.predict_row({}).label, B);
}

TEST(Logistic, SeparableToyReachesFullTrainingAccuracy) {
  auto p = dense_partition({{2, 0}, {3, 0.5}, {1.5, 0}, {0, 2}, {0.5, 3}, {0, 1.5}}, {A, A, A, B, B, B}, Weighting::tfidf);
  auto m = train_lr(p, {0.0, 0.5, 2000, 1e-12});
  for (std::size_t r = 0; r < p.size(); ++r) EXPECT_EQ(m.predict_row(p.features.row(r)).label, p.labels[r]);
  // Loss never increases along the trace.
  for (std::size_t i = 1; i < m.training_trace.size(); ++i) EXPECT_LE(m.training_trace[i], m.training_trace[i - 1] + 1e-15);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(9), v = 1 + rng.below(20);
    auto p = random_partition(seed, n, v, {A, B, C, D});
    LogisticRegressionModel m;
    m.classes = {A, B, C, D};
    m.l2_lambda = 0.1 * rng.uniform();
    m.weights.assign(4, std::vector<double>(v));
    m.bias.assign(4, 0.0);
    for (auto& w : m.weights)
      for (auto& x : w) x = rng.uniform() - 0.5;
    for (auto& b : m.bias) b = rng.uniform() - 0.5;
    auto labels = label_positions(m.classes, p.labels);
    auto g = loss_and_gradient(m, p.features, labels);
    const double h = 1e-5;
    double worst = 0.0;
    auto check = [&](double& param, double analytic) {
      double keep = param;
      param = keep + h;
      double up = loss_and_gradient(m, p.features, labels).loss;
      param = keep - h;
      double down = loss_and_gradient(m, p.features, labels).loss;
      param = keep;
      double numeric = (up - down) / (2 * h);
      double rel = std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      worst = std::max(worst, rel);
    };
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t t = 0; t < v; ++t) check(m.weights[c][t], g.d_weights[c][t]);
      check(m.bias[c], g.d_bias[c]);
    }
    EXPECT_LT(worst, 1e-4) << "seed " << seed;
  }
}

TEST(Logistic, ProbabilitiesMatchDenseOracle) {
  auto p = random_partition(4, 5, 6, {A, B, C});
  auto m = train_lr(p, {});
  for (std::size_t r = 0; r < p.size(); ++r) {
    auto x = p.features.dense_row(r);
    std::vector<double> s(3);
    for (std::size_t c = 0; c < 3; ++c) {
      s[c] = m.bias[c];
      for (std::size_t t = 0; t < x.size(); ++t) s[c] += m.weights[c][t] * x[t];
    }
    double z = 0;
    for (double v : s) z += std::exp(v);
    auto pr = m.predict_row(p.features.row(r));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(pr.probabilities[c], std::exp(s[c]) / z, 1e-12);
  }
}

TEST(Logistic, DivergenceIsReported) {
  auto p = dense_partition({{1e3, 0}, {0, 1e3}}, {A, B}, Weighting::tfidf);
  try {
    train_lr(p, {0.0, 1e6, 50, 0.0});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::internal);
    return;
  }
  SUCCEED() << "did not diverge on this instance";
}

TEST(Prediction, SoftmaxIsStableForLargeScores) {
  auto pr = Prediction::from_scores({A, B}, {1000.0, 999.0});
  EXPECT_NEAR(sum(pr.probabilities), 1.0, 1e-15);
  EXPECT_EQ(pr.label, A);
  auto tie = Prediction::from_scores({A, B}, {0.5, 0.5});
  EXPECT_EQ(tie.label, A);
}

// ---------------------------------------------------------------------------
// End to end on synthetic text

namespace {

struct SynthFixture {
  std::vector<WorkOrder> orders;
  std::vector<TokenDoc> docs;
};

const SynthFixture& synth_fixture() {
  static const SynthFixture f = [] {
    auto cfg = synth::default_config();
    cfg.n_turbines = 8;
    cfg.seed = 21;
    cfg.noise_rate = 0.05;
    cfg.negation_rate = 0.1;
    auto corpus = synth::generate(cfg);
    Preprocessor pp({"the", "of", "on", "at", "for", "and", "as", "per", "to", "from", "with", "after", "am", "an", "der",
                     "die", "das", "nach", "für"},
                    {});
    return SynthFixture{corpus.orders, pp.run(corpus.orders).docs};
  }();
  return f;
}

}  // namespace

TEST(Pipeline, ProbabilitiesSumToOneForAllModels) {
  const auto& f = synth_fixture();
  for (auto model : {ModelType::naive_bayes, ModelType::logistic_regression})
    for (auto over : {Oversampler::none, Oversampler::random, Oversampler::smote}) {
      TrainConfig cfg;
      cfg.model = model;
      cfg.oversampler = over;
      cfg.seed = 3;
      cfg.lr.max_epochs = 100;
      auto r = train_classifier(f.docs, f.orders, cfg);
      for (const auto& pr : r.model.predict(f.docs)) {
        ASSERT_NEAR(sum(pr.probabilities), 1.0, 1e-9);
        for (double p : pr.probabilities) ASSERT_GE(p, 0.0);
      }
    }
}

TEST(Pipeline, TrainingIsDeterministicAndSerializable) {
  const auto& f = synth_fixture();
  TrainConfig cfg;
  cfg.model = ModelType::logistic_regression;
  cfg.oversampler = Oversampler::smote;
  cfg.seed = 7;
  cfg.lr.max_epochs = 60;
  auto a = train_classifier(f.docs, f.orders, cfg, "fp");
  auto b = train_classifier(f.docs, f.orders, cfg, "fp");
  EXPECT_EQ(model_to_json(a.model).dump(), model_to_json(b.model).dump());

  auto path = std::filesystem::temp_directory_path() / "mwo_model_roundtrip.json";
  save_model(a.model, path);
  auto loaded = load_model(path);
  EXPECT_EQ(model_to_json(loaded).dump(), model_to_json(a.model).dump());
  auto p1 = a.model.predict(f.docs), p2 = loaded.predict(f.docs);
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1[i].probabilities, p2[i].probabilities);
  std::filesystem::remove(path);
}

TEST(Pipeline, VocabularyMismatchIsRejected) {
  const auto& f = synth_fixture();
  TrainConfig cfg;
  cfg.model = ModelType::naive_bayes;
  auto r = train_classifier(f.docs, f.orders, cfg);
  FeatureMatrix wrong({}, r.model.vocabulary.size() + 1, Weighting::count);
  EXPECT_THROW(r.model.predict(wrong), Error);
  FeatureMatrix wrong_kind({}, r.model.vocabulary.size(), Weighting::tfidf);
  EXPECT_THROW(r.model.predict(wrong_kind), Error);
}

TEST(Pipeline, OversamplingOnlyTouchesTrainPartition) {
  const auto& f = synth_fixture();
  TrainConfig cfg;
  cfg.model = ModelType::naive_bayes;
  cfg.oversampler = Oversampler::random;
  auto r = train_classifier(f.docs, f.orders, cfg);
  EXPECT_EQ(r.dataset.train.size() + r.dataset.test.size(), r.dataset.labels.size());
  EXPECT_GT(r.augmented.data.size(), r.dataset.train.size());
  auto counts = r.augmented.data.class_counts();
  for (auto& [c, n] : counts) EXPECT_EQ(n, counts.begin()->second);
}
