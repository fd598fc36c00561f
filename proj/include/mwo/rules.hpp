#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwo/error.hpp"
#include "mwo/tagging.hpp"

namespace mwo::rules {

enum class RuleId { R1, R2, R3, R4 };

inline constexpr std::array<RuleId, 4> kAllRules{RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4};

inline const char* to_string(RuleId r) {
  switch (r) {
    case RuleId::R1: return "R1";
    case RuleId::R2: return "R2";
    case RuleId::R3: return "R3";
    case RuleId::R4: return "R4";
  }
  return "R1";
}

inline std::optional<RuleId> parse_rule(std::string_view s) {
  if (s == "R1") return RuleId::R1;
  if (s == "R2") return RuleId::R2;
  if (s == "R3") return RuleId::R3;
  if (s == "R4") return RuleId::R4;
  return std::nullopt;
}

// A tagged occurrence at position p is negated when one of `cues` appears
// among the `window` tokens before p in the same document.
struct NegationConfig {
  std::set<std::string> cues{"no", "not", "without", "none", "kein", "keine", "keinen", "nicht"};
  std::size_t window = 3;

  void validate() const {
    if (window < 1) throw Error("negation window must be >= 1");
    for (const auto& c : cues)
      if (text::lowercase(c) != c) throw Error("negation cues must be lowercase: " + c);
  }

  bool negated(const std::vector<std::string>& tokens, std::size_t pos) const {
    std::size_t from = pos >= window ? pos - window : 0;
    for (std::size_t i = from; i < pos; ++i)
      if (cues.count(tokens[i])) return true;
    return false;
  }
};

inline void to_json(nlohmann::json& j, const NegationConfig& n) {
  j = {{"cues", std::vector<std::string>(n.cues.begin(), n.cues.end())}, {"window", n.window}};
}

struct RuleSelection {
  RuleId rule;
  std::vector<std::string> selected_ids;           // corpus order
  std::vector<std::string> excluded_by_negation;   // R2/R4 only
  std::string corpus_fingerprint;
  std::size_t corpus_size = 0;
};

inline void to_json(nlohmann::json& j, const RuleSelection& s) {
  j = {{"rule", to_string(s.rule)},
       {"selected_ids", s.selected_ids},
       {"excluded_by_negation", s.excluded_by_negation},
       {"corpus_fingerprint", s.corpus_fingerprint},
       {"corpus_size", s.corpus_size}};
}

namespace detail {

// Positions of the qualifying occurrences for one rule in one document.
inline std::vector<std::size_t> qualifying_positions(const TaggedDoc& doc, RuleId rule, const std::string& failure_alias) {
  std::vector<std::size_t> pos;
  for (const auto& [tag, where] : doc.tags) {
    if (tag.entity != TagEntity::problem) continue;
    if ((rule == RuleId::R1 || rule == RuleId::R2) && tag.alias != failure_alias) continue;
    pos.insert(pos.end(), where.begin(), where.end());
  }
  return pos;
}

}  // namespace detail

// R1: docs with a P-tagged token whose alias is `failure_alias`.
// R2: R1 minus docs in which every such occurrence is negated.
// R3: docs with any P-tagged token (U and X never count).
// R4: R3 minus docs in which every P occurrence is negated.
inline RuleSelection select(RuleId rule, const TaggedCorpus& tagged, const std::string& failure_alias,
                            const NegationConfig& negation, const TagVocabulary* vocabulary = nullptr) {
  negation.validate();
  if ((rule == RuleId::R1 || rule == RuleId::R2) && vocabulary &&
      !vocabulary->has_alias(failure_alias, TagEntity::problem))
    throw Error("failure alias `" + failure_alias + "` is not a P-entity alias in the vocabulary", ErrorKind::validation,
                {{"failure_alias", failure_alias}});

  RuleSelection sel{rule, {}, {}, tagged.fingerprint(), tagged.docs.size()};
  const bool check_negation = rule == RuleId::R2 || rule == RuleId::R4;
  for (const auto& doc : tagged.docs) {
    auto pos = detail::qualifying_positions(doc, rule, failure_alias);
    if (pos.empty()) continue;
    if (check_negation &&
        std::all_of(pos.begin(), pos.end(), [&](std::size_t p) { return negation.negated(doc.tokens, p); })) {
      sel.excluded_by_negation.push_back(doc.work_order_id);
      continue;
    }
    sel.selected_ids.push_back(doc.work_order_id);
  }
  return sel;
}

struct RuleReportRow {
  RuleId rule;
  std::size_t selected = 0;
  std::size_t excluded_by_negation = 0;
  double fraction = 0.0;
};

struct RuleReport {
  std::vector<RuleReportRow> rows;
  std::size_t corpus_size = 0;
};

inline bool is_subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sb(b.begin(), b.end());
  return std::all_of(a.begin(), a.end(), [&](const std::string& x) { return sb.count(x) > 0; });
}

// Expects the four selections R1..R4 in order, all from the same corpus.
// Throws (internal) if the subset chain R2 ⊆ R1 ⊆ R3, R4 ⊆ R3 is violated.
inline RuleReport rule_report(const std::vector<RuleSelection>& selections, std::size_t corpus_size) {
  if (selections.size() != 4) throw Error("rule_report expects the four selections R1..R4");
  for (std::size_t i = 0; i < 4; ++i) {
    if (selections[i].rule != kAllRules[i]) throw Error("rule_report expects selections ordered R1..R4");
    if (selections[i].corpus_fingerprint != selections[0].corpus_fingerprint || selections[i].corpus_size != corpus_size)
      throw Error("rule selections come from different corpora", ErrorKind::validation);
  }
  const auto& r1 = selections[0].selected_ids;
  const auto& r2 = selections[1].selected_ids;
  const auto& r3 = selections[2].selected_ids;
  const auto& r4 = selections[3].selected_ids;
  if (!is_subset(r2, r1) || !is_subset(r1, r3) || !is_subset(r4, r3))
    throw Error("rule subset chain violated", ErrorKind::internal);

  RuleReport rep;
  rep.corpus_size = corpus_size;
  for (const auto& s : selections)
    rep.rows.push_back({s.rule, s.selected_ids.size(), s.excluded_by_negation.size(),
                        corpus_size ? static_cast<double>(s.selected_ids.size()) / static_cast<double>(corpus_size) : 0.0});
  return rep;
}

inline void to_json(nlohmann::json& j, const RuleReport& r) {
  j = {{"corpus_size", r.corpus_size}, {"rules", nlohmann::json::array()}};
  for (const auto& row : r.rows)
    j["rules"].push_back({{"rule", to_string(row.rule)},
                          {"selected", row.selected},
                          {"excluded_by_negation", row.excluded_by_negation},
                          {"fraction", row.fraction}});
}

inline std::string render(const RuleReport& r) {
  std::ostringstream out;
  char line[96];
  std::snprintf(line, sizeof line, "%-5s %9s %9s %9s\n", "Rule", "Selected", "Negated", "Fraction");
  out << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-5s %9zu %9zu %9.4f\n", to_string(row.rule), row.selected,
                  row.excluded_by_negation, row.fraction);
    out << line;
  }
  return out.str();
}

}  // namespace mwo::rules
