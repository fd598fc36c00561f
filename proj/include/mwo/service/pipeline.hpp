#pragma once

// Glue shared by the CLI and the HTTP API. Both call these functions so that
// identical persisted state yields byte-identical KPI payloads.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mwo/classify/model.hpp"
#include "mwo/corpus.hpp"
#include "mwo/csv.hpp"
#include "mwo/hash.hpp"
#include "mwo/kpi.hpp"
#include "mwo/rules.hpp"
#include "mwo/tagging.hpp"

namespace mwo::service {

namespace fs = std::filesystem;

// Word lists ship in data/; MWO_DATA_DIR in the environment overrides the
// compiled-in location.
inline fs::path data_dir() {
  if (const char* env = std::getenv("MWO_DATA_DIR"); env && *env) return env;
#ifdef MWO_DATA_DIR
  return MWO_DATA_DIR;
#else
  return "data";
#endif
}

struct WordListPaths {
  std::vector<fs::path> stopwords;
  std::vector<fs::path> junkwords;
};

inline WordListPaths default_word_lists() {
  auto dir = data_dir();
  return {{dir / "stopwords_en.txt", dir / "stopwords_de.txt"}, {dir / "junkwords.txt"}};
}

inline Preprocessor make_preprocessor(const WordListPaths& paths = default_word_lists()) {
  WordSet stop, junk;
  for (const auto& p : paths.stopwords) stop.merge(load_word_list(p));
  for (const auto& p : paths.junkwords) junk.merge(load_word_list(p));
  return Preprocessor(std::move(stop), std::move(junk));
}

inline std::string vocabulary_csv(const TagVocabulary& vocab) {
  std::ostringstream out;
  write_vocab_csv(out, vocab);
  return out.str();
}

inline std::string vocabulary_fingerprint(const TagVocabulary& vocab) {
  return Fnv1a().update(vocabulary_csv(vocab)).fingerprint(vocab.entries().size());
}

struct RuleKpiRequest {
  rules::RuleId rule = rules::RuleId::R4;
  std::string failure_alias = "failure";
  rules::NegationConfig negation;
  kpi::KpiOptions kpi;
};

inline void to_json(nlohmann::json& j, const RuleKpiRequest& r) {
  j = {{"rule", rules::to_string(r.rule)}, {"failure_alias", r.failure_alias}, {"negation", r.negation}};
}

struct RuleKpiResult {
  rules::RuleSelection selection;
  kpi::KpiReport report;
};

// tagged corpus -> rule selection -> KPI report.
inline RuleKpiResult rule_kpi(const std::vector<WorkOrder>& orders, const Fleet& fleet, const std::vector<TokenDoc>& docs,
                              const std::string& preprocess_fingerprint, const TagVocabulary& vocab,
                              const RuleKpiRequest& req, double effort_hours) {
  auto tagged = apply_tags(docs, vocab);
  RuleKpiResult out;
  out.selection = rules::select(req.rule, tagged, req.failure_alias, req.negation, &vocab);
  nlohmann::json snapshot = req;
  snapshot["preprocess_fingerprint"] = preprocess_fingerprint;
  snapshot["vocabulary_fingerprint"] = vocabulary_fingerprint(vocab);
  snapshot["corpus_fingerprint"] = out.selection.corpus_fingerprint;
  out.report = kpi::compute_kpi(orders, fleet, out.selection, effort_hours, req.kpi, std::move(snapshot));
  return out;
}

// Compact per-rule summary used by the live preview.
inline nlohmann::json rule_summary(const rules::RuleSelection& s) {
  return {{"rule", rules::to_string(s.rule)},
          {"selected", s.selected_ids.size()},
          {"excluded_by_negation", s.excluded_by_negation.size()},
          {"corpus_size", s.corpus_size},
          {"corpus_fingerprint", s.corpus_fingerprint}};
}

// ---------------------------------------------------------------------------
// Classifier predictions on disk: work_order_id,predicted,p_<code>...

inline void write_predictions_csv(std::ostream& out, const std::vector<TokenDoc>& docs,
                                  const std::vector<classify::Prediction>& preds,
                                  const std::vector<ZeusCode>& classes) {
  csv::Row header{"work_order_id", "predicted"};
  for (auto c : classes) header.push_back("p_" + std::string(c.code()));
  csv::write_row(out, header);
  char buf[32];
  for (std::size_t i = 0; i < docs.size(); ++i) {
    csv::Row row{docs[i].work_order_id, std::string(preds[i].label.code())};
    for (double p : preds[i].probabilities) {
      std::snprintf(buf, sizeof buf, "%.17g", p);
      row.emplace_back(buf);
    }
    csv::write_row(out, row);
  }
}

inline std::unordered_map<std::string, ZeusCode> parse_predictions_csv(std::string_view data) {
  auto rows = csv::parse(data);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "work_order_id" || rows[0][1] != "predicted")
    throw Error("predictions file needs columns work_order_id,predicted", ErrorKind::validation);
  std::unordered_map<std::string, ZeusCode> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() < 2) throw Error("ragged predictions row", ErrorKind::validation, {{"line", r + 1}});
    auto code = ZeusCode::parse(rows[r][1]);
    if (!code) throw Error("unknown ZEUS code in predictions: " + rows[r][1], ErrorKind::validation, {{"line", r + 1}});
    out.emplace(rows[r][0], *code);
  }
  return out;
}

inline void write_text_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace mwo::service
