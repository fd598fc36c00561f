#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mwo/classify/dataset.hpp"
#include "mwo/classify/logistic.hpp"
#include "mwo/classify/metrics.hpp"
#include "mwo/classify/naive_bayes.hpp"
#include "mwo/classify/oversample.hpp"
#include "mwo/corpus.hpp"
#include "mwo/features.hpp"

namespace mwo::classify {

enum class ModelType { naive_bayes, logistic_regression };

inline const char* to_string(ModelType t) { return t == ModelType::naive_bayes ? "nb" : "lr"; }

inline ModelType parse_model_type(std::string_view s) {
  if (s == "nb") return ModelType::naive_bayes;
  if (s == "lr") return ModelType::logistic_regression;
  throw Error("unknown model type: " + std::string(s));
}

struct TrainConfig {
  ModelType model = ModelType::logistic_regression;
  Oversampler oversampler = Oversampler::random;
  std::uint64_t seed = 0;
  double test_fraction = 0.3;
  std::size_t min_df = 1;
  std::size_t k_neighbors = 5;
  double nb_alpha = 1.0;
  LrOptions lr;
  IdfVariant idf = IdfVariant::plain;
  // Empty means the default pairing: counts for NB, TF-IDF for LR.
  std::optional<Weighting> features;

  Weighting feature_weighting() const {
    if (features) return *features;
    return model == ModelType::naive_bayes ? Weighting::count : Weighting::tfidf;
  }
};

struct ClassifierModel {
  TrainConfig config;
  std::string preprocess_fingerprint;
  std::vector<std::string> warnings;
  FeatureVocabulary vocabulary;
  std::variant<NaiveBayesModel, LogisticRegressionModel> parameters;

  const std::vector<ZeusCode>& classes() const {
    return std::visit([](const auto& m) -> const std::vector<ZeusCode>& { return m.classes; }, parameters);
  }

  FeatureMatrix featurize(const std::vector<TokenDoc>& docs) const {
    auto counts = vectorize_counts(docs, vocabulary);
    if (config.feature_weighting() == Weighting::tfidf) return tfidf(counts, vocabulary, config.idf);
    return counts;
  }

  std::vector<Prediction> predict(const FeatureMatrix& features) const {
    if (features.n_cols() != vocabulary.size())
      throw Error("feature vocabulary does not match the model vocabulary", ErrorKind::validation,
                  {{"features", features.n_cols()}, {"model", vocabulary.size()}});
    if (features.weighting() != config.feature_weighting())
      throw Error(std::string("model expects ") + to_string(config.feature_weighting()) + " features");
    std::vector<Prediction> out;
    out.reserve(features.n_rows());
    for (const auto& row : features.rows())
      out.push_back(std::visit([&](const auto& m) { return m.predict_row(row); }, parameters));
    return out;
  }

  std::vector<Prediction> predict(const std::vector<TokenDoc>& docs) const { return predict(featurize(docs)); }
};

struct TrainResult {
  ClassifierModel model;
  LabeledDataset dataset;
  Oversampled augmented;
};

// Labeled docs -> stratified split -> vocabulary on the training rows ->
// features -> oversampling of the training partition -> model.
inline TrainResult train_classifier(const std::vector<TokenDoc>& docs, const std::vector<WorkOrder>& orders,
                                    const TrainConfig& cfg, std::string preprocess_fingerprint = {}) {
  std::unordered_map<std::string, const WorkOrder*> by_id;
  for (const auto& o : orders) by_id.emplace(o.id, &o);
  std::vector<TokenDoc> labeled_docs;
  LabeledDataset ds;
  for (const auto& d : docs) {
    auto it = by_id.find(d.work_order_id);
    if (it == by_id.end()) throw Error("token doc without work order: " + d.work_order_id);
    if (!it->second->zeus_code) continue;
    labeled_docs.push_back(d);
    ds.labels.push_back(it->second->zeus_code->level3());
    ds.ids.push_back(d.work_order_id);
  }
  if (labeled_docs.empty()) throw Error("no labeled work orders to train on");
  stratified_split(ds, cfg.test_fraction, cfg.seed);

  std::vector<TokenDoc> train_docs;
  for (auto r : ds.train) train_docs.push_back(labeled_docs[r]);

  TrainResult result;
  result.model.config = cfg;
  result.model.preprocess_fingerprint = std::move(preprocess_fingerprint);
  result.model.vocabulary = build_vocabulary(train_docs, cfg.min_df);
  result.model.warnings = ds.warnings;
  ds.features = result.model.featurize(labeled_docs);

  Partition train = ds.train_partition();
  auto classes = train.classes();
  result.augmented = oversample(train, cfg.oversampler, derive_seed(cfg.seed, 1), cfg.k_neighbors);
  for (auto& w : result.augmented.warnings) result.model.warnings.push_back(w);

  if (cfg.model == ModelType::naive_bayes)
    result.model.parameters = train_nb(result.augmented.data, cfg.nb_alpha, classes);
  else
    result.model.parameters = train_lr(result.augmented.data, cfg.lr, classes);
  result.dataset = std::move(ds);
  return result;
}

// Recomputes the split recorded in the model and scores the test rows.
inline MetricsReport evaluate_model(const ClassifierModel& model, const std::vector<TokenDoc>& docs,
                                    const std::vector<WorkOrder>& orders, std::size_t min_class_support = 1) {
  std::unordered_map<std::string, const WorkOrder*> by_id;
  for (const auto& o : orders) by_id.emplace(o.id, &o);
  std::vector<TokenDoc> labeled_docs;
  LabeledDataset ds;
  for (const auto& d : docs) {
    auto it = by_id.find(d.work_order_id);
    if (it == by_id.end() || !it->second->zeus_code) continue;
    labeled_docs.push_back(d);
    ds.labels.push_back(it->second->zeus_code->level3());
  }
  stratified_split(ds, model.config.test_fraction, model.config.seed);
  std::vector<TokenDoc> test_docs;
  std::vector<ZeusCode> truth;
  for (auto r : ds.test) {
    test_docs.push_back(labeled_docs[r]);
    truth.push_back(ds.labels[r]);
  }
  if (test_docs.empty()) throw Error("test partition is empty");
  auto preds = model.predict(test_docs);
  std::vector<std::string> predicted;
  for (const auto& p : preds) predicted.emplace_back(p.label.code());
  return evaluate(predicted, codes(truth), min_class_support);
}

// ---------------------------------------------------------------------------
// Model files

inline nlohmann::json model_to_json(const ClassifierModel& m) {
  const auto& c = m.config;
  nlohmann::json meta = {
      {"model_type", to_string(c.model)},
      {"oversampler", to_string(c.oversampler)},
      {"seed", c.seed},
      {"feature_variant", to_string(c.feature_weighting())},
      {"idf_variant", to_string(c.idf)},
      {"test_fraction", c.test_fraction},
      {"min_df", c.min_df},
      {"k_neighbors", c.k_neighbors},
      {"nb_alpha", c.nb_alpha},
      {"lr", {{"l2_lambda", c.lr.l2_lambda}, {"learning_rate", c.lr.learning_rate}, {"max_epochs", c.lr.max_epochs}, {"tol", c.lr.tol}}},
      {"preprocess_fingerprint", m.preprocess_fingerprint},
      {"warnings", m.warnings},
  };
  nlohmann::json params;
  std::vector<std::string> classes;
  for (auto z : m.classes()) classes.emplace_back(z.code());
  if (auto* nb = std::get_if<NaiveBayesModel>(&m.parameters)) {
    params = {{"smoothing_alpha", nb->smoothing_alpha},
              {"class_log_prior", nb->class_log_prior},
              {"term_log_likelihood", nb->term_log_likelihood}};
  } else {
    const auto& lr = std::get<LogisticRegressionModel>(m.parameters);
    params = {{"l2_lambda", lr.l2_lambda}, {"weights", lr.weights}, {"bias", lr.bias}, {"training_trace", lr.training_trace}};
  }
  return {{"format", "mwo-classifier/1"},
          {"metadata", meta},
          {"classes", classes},
          {"vocabulary", m.vocabulary},
          {"parameters", params}};
}

inline ClassifierModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mwo-classifier/1") throw Error("not a classifier model file");
  ClassifierModel m;
  const auto& meta = j.at("metadata");
  auto& c = m.config;
  c.model = parse_model_type(meta.at("model_type").get<std::string>());
  c.oversampler = parse_oversampler(meta.at("oversampler").get<std::string>());
  c.seed = meta.at("seed").get<std::uint64_t>();
  c.features = meta.at("feature_variant").get<std::string>() == "count" ? Weighting::count : Weighting::tfidf;
  c.idf = parse_idf_variant(meta.at("idf_variant").get<std::string>());
  c.test_fraction = meta.at("test_fraction").get<double>();
  c.min_df = meta.at("min_df").get<std::size_t>();
  c.k_neighbors = meta.at("k_neighbors").get<std::size_t>();
  c.nb_alpha = meta.at("nb_alpha").get<double>();
  const auto& lr = meta.at("lr");
  c.lr = {lr.at("l2_lambda").get<double>(), lr.at("learning_rate").get<double>(), lr.at("max_epochs").get<std::size_t>(),
          lr.at("tol").get<double>()};
  m.preprocess_fingerprint = meta.at("preprocess_fingerprint").get<std::string>();
  m.warnings = meta.at("warnings").get<std::vector<std::string>>();
  m.vocabulary = j.at("vocabulary").get<FeatureVocabulary>();

  std::vector<ZeusCode> classes;
  for (const auto& s : j.at("classes")) {
    auto z = ZeusCode::parse(s.get<std::string>());
    if (!z) throw Error("unknown class in model file: " + s.get<std::string>());
    classes.push_back(*z);
  }
  const auto& p = j.at("parameters");
  if (c.model == ModelType::naive_bayes) {
    NaiveBayesModel nb;
    nb.classes = classes;
    nb.smoothing_alpha = p.at("smoothing_alpha").get<double>();
    nb.class_log_prior = p.at("class_log_prior").get<std::vector<double>>();
    nb.term_log_likelihood = p.at("term_log_likelihood").get<std::vector<std::vector<double>>>();
    m.parameters = std::move(nb);
  } else {
    LogisticRegressionModel lrm;
    lrm.classes = classes;
    lrm.l2_lambda = p.at("l2_lambda").get<double>();
    lrm.weights = p.at("weights").get<std::vector<std::vector<double>>>();
    lrm.bias = p.at("bias").get<std::vector<double>>();
    lrm.training_trace = p.at("training_trace").get<std::vector<double>>();
    m.parameters = std::move(lrm);
  }
  return m;
}

inline void save_model(const ClassifierModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file: " + path.string());
  out << model_to_json(m).dump(1) << '\n';
}

inline ClassifierModel load_model(const std::filesystem::path& path) {
  return model_from_json(nlohmann::json::parse(csv::read_file(path)));
}

}  // namespace mwo::classify
