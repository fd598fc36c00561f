#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mwo/corpus.hpp"
#include "mwo/date.hpp"
#include "mwo/error.hpp"
#include "mwo/kpi.hpp"
#include "mwo/rng.hpp"
#include "mwo/rules.hpp"
#include "mwo/tagging.hpp"
#include "mwo/zeus.hpp"

namespace mwo::synth {

// Phrase templates per class; `{item}` is replaced by a component name of the
// same language.
struct TemplateSet {
  std::vector<std::string> english;
  std::vector<std::string> german;
};

struct SynthConfig {
  std::size_t n_turbines = 40;
  Date window_start = make_date(2016, 1, 1);
  Date window_end = make_date(2020, 1, 1);
  std::map<ZeusCode, double> rate_per_year;
  std::map<ZeusCode, TemplateSet> templates;
  TemplateSet negated_templates;  // rewrites of corrective orders
  double negation_rate = 0.0;
  double noise_rate = 0.0;
  double german_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (window_end <= window_start) throw Error("synthetic window must have positive length");
    if (n_turbines == 0) throw Error("n_turbines must be >= 1");
    for (const auto& [code, rate] : rate_per_year) {
      if (!std::isfinite(rate) || rate < 0.0) throw Error("rates must be finite and >= 0: " + std::string(code.code()));
      if (code.level() != 3) throw Error("synthetic rates are per level-3 class");
      if (rate > 0.0 && (!templates.count(code) || templates.at(code).english.empty()))
        throw Error("missing templates for class " + std::string(code.code()));
    }
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(negation_rate) || !prob(noise_rate) || !prob(german_fraction))
      throw Error("negation_rate, noise_rate and german_fraction must lie in [0, 1]");
    if (negation_rate > 0.0 && negated_templates.english.empty()) throw Error("negation needs negated templates");
  }

  // Expected 02-08-01 rate after negated rewrites are moved to 02-08-97.
  double planted_corrective_rate() const {
    auto it = rate_per_year.find(kCorrective);
    return it == rate_per_year.end() ? 0.0 : it->second * (1.0 - negation_rate);
  }
};

inline const std::vector<std::string>& items_en() {
  static const std::vector<std::string> v{"gearbox",   "generator",     "pitch motor", "yaw drive",   "converter",
                                          "anemometer", "hydraulic pump", "blade bearing", "main bearing", "crane",
                                          "cooling fan", "slip ring",     "pitch battery", "brake",       "sensor"};
  return v;
}

inline const std::vector<std::string>& items_de() {
  static const std::vector<std::string> v{"Getriebe",   "Generator",      "Pitchmotor", "Azimutantrieb", "Umrichter",
                                          "Anemometer", "Hydraulikpumpe", "Blattlager", "Hauptlager",    "Kran",
                                          "Lüfter",     "Schleifring",    "Pitchbatterie", "Bremse",     "Sensor"};
  return v;
}

inline SynthConfig default_config() {
  SynthConfig c;
  using Id = ZeusCode::Id;
  c.rate_per_year = {{ZeusCode(Id::corrective), 8.0},
                     {ZeusCode(Id::preventive), 4.0},
                     {ZeusCode(Id::undefined), 0.25},
                     {ZeusCode(Id::unresolved), 0.4},
                     {ZeusCode(Id::insignificant), 0.5}};
  c.templates[ZeusCode(Id::corrective)] = {
      {"{item} failure detected, {item} replaced.", "Fault on {item}. Component exchanged.",
       "Broken {item} repaired after turbine stop.", "Error message from {item}, defective part replaced.",
       "Troubleshooting at {item} performed, defective {item} exchanged.", "Damaged {item} found and repaired.",
       "Turbine stopped with {item} fault. Repair carried out."},
      {"Störung am {item}, {item} getauscht.", "{item} defekt, ausgetauscht.", "Fehler {item} behoben, Teil ersetzt."}};
  c.templates[ZeusCode(Id::preventive)] = {
      {"Scheduled maintenance of {item} performed.", "Annual inspection of {item} completed.",
       "Oil change on {item} as per service plan.", "Routine check of {item}, lubrication done.",
       "Internal inspection of {item} carried out as planned."},
      {"Wartung {item} durchgeführt.", "Jahresinspektion {item} abgeschlossen.", "Ölwechsel {item} nach Wartungsplan."}};
  c.templates[ZeusCode(Id::undefined)] = {
      {"Visual check of {item}, everything in order.", "{item} in position. Documentation updated."},
      {"Sichtprüfung {item}, alles in Ordnung."}};
  c.templates[ZeusCode(Id::unresolved)] = {
      {"{item} checked, cause could not be determined, follow-up visit required.",
       "Investigation of {item} inconclusive, awaiting manufacturer statement."},
      {"{item} geprüft, Ursache unklar, weiterer Einsatz erforderlich."}};
  c.templates[ZeusCode(Id::insignificant)] = {
      {"Site visit for photos of {item}.", "Spare parts for {item} delivered to site.", "Access road cleared near turbine."},
      {"Ersatzteile für {item} angeliefert."}};
  c.negated_templates = {
      {"No failure detected on {item}.", "{item} checked, no fault found. Turbine back in operation.",
       "No broken {item} found. WT back in operation.", "{item} inspected without damage, restarted."},
      {"Kein Defekt am {item} festgestellt.", "Keine Störung am {item} gefunden, Anlage wieder in Betrieb."}};
  return c;
}

struct OrderTruth {
  ZeusCode code;
  bool negated = false;
};

struct SynthTruth {
  std::map<std::string, OrderTruth> orders;
  std::map<std::string, std::map<ZeusCode, std::size_t>> counts;  // turbine -> class -> events
  double planted_corrective_rate = 0.0;
  std::uint64_t seed = 0;
};

inline void to_json(nlohmann::json& j, const SynthTruth& t) {
  nlohmann::json orders = nlohmann::json::object();
  for (const auto& [id, o] : t.orders) orders[id] = {{"zeus_code", std::string(o.code.code())}, {"negated", o.negated}};
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [wt, m] : t.counts)
    for (const auto& [code, n] : m) counts[wt][std::string(code.code())] = n;
  j = {{"seed", t.seed}, {"planted_corrective_rate", t.planted_corrective_rate}, {"orders", orders}, {"counts", counts}};
}

inline void from_json(const nlohmann::json& j, SynthTruth& t) {
  t.seed = j.at("seed").get<std::uint64_t>();
  t.planted_corrective_rate = j.at("planted_corrective_rate").get<double>();
  for (const auto& [id, o] : j.at("orders").items())
    t.orders.emplace(id, OrderTruth{*ZeusCode::parse(o.at("zeus_code").get<std::string>()), o.at("negated").get<bool>()});
  for (const auto& [wt, m] : j.at("counts").items())
    for (const auto& [code, n] : m.items()) t.counts[wt][*ZeusCode::parse(code)] = n.get<std::size_t>();
}

struct SynthCorpus {
  std::vector<WorkOrder> orders;
  Fleet fleet;
  SynthTruth truth;
};

namespace detail {

inline std::string fill(const std::string& tmpl, const std::string& item) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto at = tmpl.find("{item}", pos);
    if (at == std::string::npos) break;
    out += tmpl.substr(pos, at - pos);
    // Capitalize at sentence start.
    if (at == 0 && !item.empty() && item[0] >= 'a' && item[0] <= 'z')
      out += static_cast<char>(item[0] - 'a' + 'A') + item.substr(1);
    else
      out += item;
    pos = at + 6;
  }
  out += tmpl.substr(pos);
  return out;
}

// Per-word typo or abbreviation with probability `rate`. ASCII words only.
inline std::string add_noise(const std::string& text, double rate, Rng& rng) {
  if (rate <= 0.0) return text;
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    if (j == i) {
      out.push_back(text[i++]);
      continue;
    }
    std::string word = text.substr(i, j - i);
    if (word.size() >= 4 && rng.uniform() < rate) {
      switch (rng.below(3)) {
        case 0: {  // swap adjacent letters
          std::size_t p = 1 + rng.below(word.size() - 2);
          std::swap(word[p], word[p + 1]);
          break;
        }
        case 1:  // drop a letter
          word.erase(1 + rng.below(word.size() - 1), 1);
          break;
        default:  // abbreviate
          word = word.substr(0, 4) + ".";
          break;
      }
    }
    out += word;
    i = j;
  }
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

}  // namespace detail

// Homogeneous Poisson process per turbine and class over the window,
// descriptions sampled from templates, negated rewrites of corrective orders
// relabeled 02-08-97, optional typo/abbreviation noise. Deterministic per
// seed; output sorted by (turbine, date, id).
inline SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  const double window_days = static_cast<double>(days_between(cfg.window_start, cfg.window_end));
  SynthCorpus out;
  out.truth.seed = cfg.seed;
  out.truth.planted_corrective_rate = cfg.planted_corrective_rate();

  const int width = cfg.n_turbines >= 100 ? 3 : 2;
  for (std::size_t t = 0; t < cfg.n_turbines; ++t) {
    char wt[16];
    std::snprintf(wt, sizeof wt, "WT%0*zu", width, t + 1);
    out.fleet[wt] = FleetMeta{wt, cfg.window_start, cfg.window_start, cfg.window_end};
    auto& counts = out.truth.counts[wt];

    struct Event {
      long day;
      ZeusCode code;
      std::string description;
      bool negated;
    };
    std::vector<Event> events;
    std::size_t stream = 0;
    for (const auto& [code, rate] : cfg.rate_per_year) {
      Rng rng(derive_seed(cfg.seed, (t << 8) | stream++));
      counts[code];
      if (rate <= 0.0) continue;
      const double mean_gap = 365.25 / rate;
      double clock = rng.exponential(mean_gap);
      while (clock < window_days) {
        bool german = rng.uniform() < cfg.german_fraction;
        const auto& set = cfg.templates.at(code);
        bool negated = code == kCorrective && cfg.negation_rate > 0.0 && rng.uniform() < cfg.negation_rate;
        const auto& pool_set = negated ? cfg.negated_templates : set;
        const auto& pool = german && !pool_set.german.empty() ? pool_set.german : pool_set.english;
        const auto& items = german && !pool_set.german.empty() ? items_de() : items_en();
        std::string desc = detail::fill(detail::pick(pool, rng), detail::pick(items, rng));
        desc = detail::add_noise(desc, cfg.noise_rate, rng);
        ZeusCode label = negated ? ZeusCode(ZeusCode::Id::undefined) : code;
        events.push_back({static_cast<long>(std::floor(clock)), label, std::move(desc), negated});
        ++counts[label];
        clock += rng.exponential(mean_gap);
      }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.day < b.day; });
    std::size_t seq = 0;
    for (auto& e : events) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05zu", wt, ++seq);
      out.orders.push_back({id, wt, cfg.window_start + std::chrono::days{e.day}, std::move(e.description), e.code});
      out.truth.orders.emplace(id, OrderTruth{e.code, e.negated});
    }
  }
  return out;
}

// Analyst vocabulary matching the shipped templates: problem words grouped
// under `failure` / `damage`, a few items and solutions, cues marked X.
inline TagVocabulary reference_vocabulary(const std::string& timestamp = "1970-01-01T00:00:00Z") {
  TagVocabulary v;
  auto add = [&](std::initializer_list<const char*> terms, const char* alias, TagEntity e) {
    for (const char* t : terms) v.set(t, {alias, e, timestamp});
  };
  add({"failure", "fault", "error", "störung", "fehler"}, "failure", TagEntity::problem);
  add({"broken", "damaged", "defective", "defekt", "damage"}, "damage", TagEntity::problem);
  add({"replaced", "exchanged", "getauscht", "ausgetauscht", "ersetzt"}, "replace", TagEntity::solution);
  add({"repaired", "behoben"}, "repair", TagEntity::solution);
  add({"gearbox", "getriebe"}, "gearbox", TagEntity::item);
  add({"generator"}, "generator", TagEntity::item);
  add({"no", "kein", "keine", "without"}, "", TagEntity::irrelevant);
  return v;
}

// ---------------------------------------------------------------------------
// Scoring against planted truth

struct ClassAccuracy {
  std::size_t support = 0;
  std::size_t correct = 0;
  double accuracy() const { return support ? static_cast<double>(correct) / static_cast<double>(support) : 0.0; }
};

struct TruthScore {
  std::optional<double> label_accuracy;
  std::map<std::string, ClassAccuracy> per_class;
  std::optional<double> kpi_deviation;   // (fleet rate - planted) / planted
  std::optional<double> rule_precision;  // selected orders that are true 02-08-01
  std::optional<double> rule_recall;     // true 02-08-01 orders that were selected
};

struct PipelineOutput {
  const std::unordered_map<std::string, ZeusCode>* labels = nullptr;
  const kpi::KpiReport* report = nullptr;
  const rules::RuleSelection* selection = nullptr;
};

inline TruthScore score_against_truth(const PipelineOutput& output, const SynthTruth& truth) {
  TruthScore s;
  auto require_known = [&](const std::string& id) {
    if (!truth.orders.count(id))
      throw Error("pipeline output refers to a work order outside the synthetic corpus", ErrorKind::validation,
                  {{"work_order_id", id}});
  };
  if (output.labels) {
    std::size_t correct = 0;
    for (const auto& [id, label] : *output.labels) {
      require_known(id);
      auto truth_code = truth.orders.at(id).code.level3();
      auto& pc = s.per_class[std::string(truth_code.code())];
      ++pc.support;
      if (label.level3() == truth_code) {
        ++pc.correct;
        ++correct;
      }
    }
    if (!output.labels->empty())
      s.label_accuracy = static_cast<double>(correct) / static_cast<double>(output.labels->size());
  }
  if (output.report && output.report->fleet_failure_rate && truth.planted_corrective_rate > 0.0)
    s.kpi_deviation = (*output.report->fleet_failure_rate - truth.planted_corrective_rate) / truth.planted_corrective_rate;
  if (output.selection) {
    std::size_t tp = 0;
    for (const auto& id : output.selection->selected_ids) {
      require_known(id);
      if (truth.orders.at(id).code == kCorrective) ++tp;
    }
    std::size_t positives = 0;
    for (const auto& [id, o] : truth.orders)
      if (o.code == kCorrective) ++positives;
    if (!output.selection->selected_ids.empty())
      s.rule_precision = static_cast<double>(tp) / static_cast<double>(output.selection->selected_ids.size());
    if (positives) s.rule_recall = static_cast<double>(tp) / static_cast<double>(positives);
  }
  return s;
}

inline void to_json(nlohmann::json& j, const TruthScore& s) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [c, a] : s.per_class) per_class[c] = {{"support", a.support}, {"accuracy", a.accuracy()}};
  j = {{"label_accuracy", opt(s.label_accuracy)},
       {"per_class", per_class},
       {"kpi_deviation", opt(s.kpi_deviation)},
       {"rule_precision", opt(s.rule_precision)},
       {"rule_recall", opt(s.rule_recall)}};
}

}  // namespace mwo::synth
