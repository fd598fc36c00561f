#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mwo/corpus.hpp"
#include "mwo/error.hpp"
#include "mwo/hash.hpp"
#include "mwo/rules.hpp"
#include "mwo/zeus.hpp"

namespace mwo::kpi {

// Where the failure events came from. `detail` holds the model id or rule id.
struct Origin {
  enum class Kind { expert_labels, classifier, rule } kind = Kind::expert_labels;
  std::string detail;

  std::string label() const {
    switch (kind) {
      case Kind::expert_labels: return "expert_labels";
      case Kind::classifier: return "classifier:" + detail;
      case Kind::rule: return "rule:" + detail;
    }
    return "expert_labels";
  }

  static Origin parse(std::string_view s) {
    if (s == "expert_labels") return {Kind::expert_labels, ""};
    if (s.rfind("classifier:", 0) == 0) return {Kind::classifier, std::string(s.substr(11))};
    if (s.rfind("rule:", 0) == 0) return {Kind::rule, std::string(s.substr(5))};
    throw Error("unknown KPI origin: " + std::string(s));
  }

  friend bool operator==(const Origin&, const Origin&) = default;
};

struct ExpertLabels {};

// Level-3 predictions per work order id.
struct ClassifierLabels {
  std::unordered_map<std::string, ZeusCode> labels;
  std::string model_id;
};

using EventSource = std::variant<ExpertLabels, ClassifierLabels, rules::RuleSelection>;

inline Origin origin_of(const EventSource& source) {
  if (std::holds_alternative<ExpertLabels>(source)) return {Origin::Kind::expert_labels, ""};
  if (auto* c = std::get_if<ClassifierLabels>(&source)) return {Origin::Kind::classifier, c->model_id};
  return {Origin::Kind::rule, rules::to_string(std::get<rules::RuleSelection>(source).rule)};
}

struct FailureEventSeries {
  std::string turbine_id;
  std::vector<Date> event_dates;  // ascending; same-day duplicates allowed
  Origin origin;
};

struct Extraction {
  std::map<std::string, FailureEventSeries> series;  // every fleet turbine, possibly empty
  std::vector<std::string> out_of_window_ids;        // selected but outside the observation window
};

// Selects corrective-maintenance work orders (level-3 02-08-01) from the
// source and groups their dates per turbine.
inline Extraction extract_failure_events(const std::vector<WorkOrder>& orders, const Fleet& fleet, const EventSource& source) {
  Origin origin = origin_of(source);
  std::unordered_set<std::string> rule_ids;
  if (auto* sel = std::get_if<rules::RuleSelection>(&source)) rule_ids.insert(sel->selected_ids.begin(), sel->selected_ids.end());

  auto selected = [&](const WorkOrder& o) {
    if (std::holds_alternative<ExpertLabels>(source)) return o.zeus_code && o.zeus_code->level3() == kCorrective;
    if (auto* c = std::get_if<ClassifierLabels>(&source)) {
      auto it = c->labels.find(o.id);
      return it != c->labels.end() && it->second.level3() == kCorrective;
    }
    return rule_ids.count(o.id) > 0;
  };

  Extraction out;
  for (const auto& [id, meta] : fleet) out.series[id] = FailureEventSeries{id, {}, origin};
  std::set<std::string> missing;
  for (const auto& o : orders) {
    if (!selected(o)) continue;
    auto fit = fleet.find(o.turbine_id);
    if (fit == fleet.end()) {
      missing.insert(o.turbine_id);
      continue;
    }
    if (!fit->second.contains(o.start_date)) {
      out.out_of_window_ids.push_back(o.id);
      continue;
    }
    out.series[o.turbine_id].event_dates.push_back(o.start_date);
  }
  if (!missing.empty())
    throw Error("turbines missing from fleet metadata", ErrorKind::validation,
                {{"turbines", std::vector<std::string>(missing.begin(), missing.end())}});
  for (auto& [id, s] : out.series) std::sort(s.event_dates.begin(), s.event_dates.end());
  return out;
}

struct KpiOptions {
  double days_per_year = 365.25;
  bool collapse_same_day = false;
};

inline void to_json(nlohmann::json& j, const KpiOptions& o) {
  j = {{"days_per_year", o.days_per_year}, {"collapse_same_day", o.collapse_same_day}};
}

struct KpiItemStats {
  std::string turbine_id;
  std::size_t failure_count = 0;
  std::vector<long> deltas_days;
  std::optional<double> mtbf_days;
  std::optional<double> failure_rate_per_year;

  friend bool operator==(const KpiItemStats&, const KpiItemStats&) = default;
};

// MTBF = mean of the inter-failure intervals in days. The first interval runs
// from the turbine's first day of operation; time after the last failure is
// not counted. Undefined with no failures, or when every interval is zero.
inline KpiItemStats mtbf(const FailureEventSeries& series, const FleetMeta& meta, const KpiOptions& opt = {}) {
  std::vector<Date> dates = series.event_dates;
  if (!std::is_sorted(dates.begin(), dates.end())) throw Error("failure event dates must be sorted");
  for (auto d : dates)
    if (!meta.contains(d))
      throw Error("failure event outside the observation window", ErrorKind::validation,
                  {{"turbine_id", series.turbine_id}, {"date", format_date(d)}});
  if (opt.collapse_same_day) dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

  KpiItemStats s;
  s.turbine_id = series.turbine_id;
  s.failure_count = dates.size();
  Date previous = meta.operation_start();
  long total = 0;
  for (auto d : dates) {
    long delta = days_between(previous, d);
    if (delta < 0) throw Error("failure event before the first day of operation", ErrorKind::validation,
                               {{"turbine_id", series.turbine_id}, {"date", format_date(d)}});
    s.deltas_days.push_back(delta);
    total += delta;
    previous = d;
  }
  if (s.failure_count > 0 && total > 0) s.mtbf_days = static_cast<double>(total) / static_cast<double>(s.failure_count);
  return s;
}

// lambda [1/a] = days_per_year / MTBF [d].
inline KpiItemStats failure_rate(KpiItemStats stats, const KpiOptions& opt = {}) {
  if (stats.mtbf_days)
    stats.failure_rate_per_year = opt.days_per_year / *stats.mtbf_days;
  else
    stats.failure_rate_per_year.reset();
  return stats;
}

struct KpiReport {
  Origin origin;
  std::vector<KpiItemStats> per_turbine;  // sorted by turbine id
  std::optional<double> fleet_failure_rate;
  std::vector<std::string> excluded_turbines;
  double effort_hours = 0.0;
  std::string window_fingerprint;
  nlohmann::json config_snapshot = nlohmann::json::object();
};

inline std::string fleet_fingerprint(const Fleet& fleet) {
  std::string s;
  for (const auto& [id, m] : fleet)
    s += id + "|" + format_date(m.commissioning_date) + "|" + format_date(m.observation_start) + "|" +
         format_date(m.observation_end) + ";";
  return Fnv1a().update(s).fingerprint(fleet.size());
}

// Fleet rate = unweighted mean of the defined per-turbine rates; turbines
// without a defined rate are listed as excluded.
inline KpiReport fleet_kpi(std::vector<KpiItemStats> stats, double effort_hours, Origin origin,
                           std::string window_fingerprint = {}, nlohmann::json config_snapshot = nlohmann::json::object()) {
  if (!(effort_hours >= 0.0)) throw Error("effort hours must be >= 0");
  std::sort(stats.begin(), stats.end(), [](const auto& a, const auto& b) { return a.turbine_id < b.turbine_id; });
  KpiReport r;
  r.origin = std::move(origin);
  r.effort_hours = effort_hours;
  r.window_fingerprint = std::move(window_fingerprint);
  r.config_snapshot = std::move(config_snapshot);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : stats) {
    if (s.failure_rate_per_year) {
      sum += *s.failure_rate_per_year;
      ++n;
    } else {
      r.excluded_turbines.push_back(s.turbine_id);
    }
  }
  r.per_turbine = std::move(stats);
  if (n == 0)
    throw Error("no turbine has a defined failure rate", ErrorKind::validation, {{"excluded_turbines", r.excluded_turbines}});
  r.fleet_failure_rate = sum / static_cast<double>(n);
  return r;
}

// extract -> MTBF -> rate -> fleet aggregate in one call.
inline KpiReport compute_kpi(const std::vector<WorkOrder>& orders, const Fleet& fleet, const EventSource& source,
                             double effort_hours, const KpiOptions& opt = {},
                             nlohmann::json config_snapshot = nlohmann::json::object()) {
  auto ex = extract_failure_events(orders, fleet, source);
  std::vector<KpiItemStats> stats;
  for (const auto& [id, series] : ex.series) stats.push_back(failure_rate(mtbf(series, fleet.at(id), opt), opt));
  config_snapshot["kpi"] = opt;
  config_snapshot["out_of_window_ids"] = ex.out_of_window_ids;
  return fleet_kpi(std::move(stats), effort_hours, origin_of(source), fleet_fingerprint(fleet), std::move(config_snapshot));
}

inline void to_json(nlohmann::json& j, const KpiItemStats& s) {
  j = {{"turbine_id", s.turbine_id},
       {"failure_count", s.failure_count},
       {"deltas_days", s.deltas_days},
       {"mtbf_days", s.mtbf_days ? nlohmann::json(*s.mtbf_days) : nlohmann::json(nullptr)},
       {"failure_rate_per_year", s.failure_rate_per_year ? nlohmann::json(*s.failure_rate_per_year) : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, KpiItemStats& s) {
  s.turbine_id = j.at("turbine_id").get<std::string>();
  s.failure_count = j.at("failure_count").get<std::size_t>();
  s.deltas_days = j.at("deltas_days").get<std::vector<long>>();
  s.mtbf_days = j.at("mtbf_days").is_null() ? std::nullopt : std::optional<double>(j.at("mtbf_days").get<double>());
  s.failure_rate_per_year = j.at("failure_rate_per_year").is_null()
                                ? std::nullopt
                                : std::optional<double>(j.at("failure_rate_per_year").get<double>());
}

inline void to_json(nlohmann::json& j, const KpiReport& r) {
  j = {{"origin", r.origin.label()},
       {"fleet_failure_rate", r.fleet_failure_rate ? nlohmann::json(*r.fleet_failure_rate) : nlohmann::json(nullptr)},
       {"excluded_turbines", r.excluded_turbines},
       {"effort_hours", r.effort_hours},
       {"window_fingerprint", r.window_fingerprint},
       {"per_turbine", r.per_turbine},
       {"config_snapshot", r.config_snapshot}};
}

inline void from_json(const nlohmann::json& j, KpiReport& r) {
  r.origin = Origin::parse(j.at("origin").get<std::string>());
  r.fleet_failure_rate = j.at("fleet_failure_rate").is_null()
                             ? std::nullopt
                             : std::optional<double>(j.at("fleet_failure_rate").get<double>());
  r.excluded_turbines = j.at("excluded_turbines").get<std::vector<std::string>>();
  r.effort_hours = j.at("effort_hours").get<double>();
  r.window_fingerprint = j.at("window_fingerprint").get<std::string>();
  r.per_turbine = j.at("per_turbine").get<std::vector<KpiItemStats>>();
  r.config_snapshot = j.value("config_snapshot", nlohmann::json::object());
}

// ---------------------------------------------------------------------------
// Cross-method comparison

struct ComparisonRow {
  std::string method;
  double failure_rate_per_year = 0.0;
  double effort_hours = 0.0;
  double absolute_deviation = 0.0;  // method - reference
  double relative_deviation = 0.0;  // (method - reference) / reference
};

struct ComparisonTable {
  std::string reference;
  std::vector<ComparisonRow> rows;
};

struct NamedReport {
  std::string method;
  KpiReport report;
};

// Reference defaults to the expert-label report, else the first one.
inline ComparisonTable compare(const std::vector<NamedReport>& reports, std::optional<std::string> reference = std::nullopt) {
  if (reports.size() < 2) throw Error("compare needs at least two reports");
  for (const auto& r : reports) {
    if (r.report.window_fingerprint != reports.front().report.window_fingerprint)
      throw Error("observation windows differ between reports", ErrorKind::validation,
                  {{"method", r.method}, {"expected", reports.front().report.window_fingerprint},
                   {"found", r.report.window_fingerprint}});
    if (!r.report.fleet_failure_rate) throw Error("report without a fleet failure rate: " + r.method);
  }
  const NamedReport* ref = nullptr;
  if (reference) {
    for (const auto& r : reports)
      if (r.method == *reference) ref = &r;
    if (!ref) throw Error("reference method not found: " + *reference, ErrorKind::not_found);
  } else {
    for (const auto& r : reports)
      if (r.report.origin.kind == Origin::Kind::expert_labels && !ref) ref = &r;
    if (!ref) ref = &reports.front();
  }
  const double ref_rate = *ref->report.fleet_failure_rate;
  ComparisonTable t;
  t.reference = ref->method;
  for (const auto& r : reports) {
    double rate = *r.report.fleet_failure_rate;
    double abs_dev = &r == ref ? 0.0 : rate - ref_rate;
    t.rows.push_back({r.method, rate, r.report.effort_hours, abs_dev, &r == ref ? 0.0 : abs_dev / ref_rate});
  }
  return t;
}

inline void to_json(nlohmann::json& j, const ComparisonTable& t) {
  j = {{"reference", t.reference}, {"rows", nlohmann::json::array()}};
  for (const auto& r : t.rows)
    j["rows"].push_back({{"method", r.method},
                         {"failure_rate_per_year", r.failure_rate_per_year},
                         {"effort_hours", r.effort_hours},
                         {"absolute_deviation", r.absolute_deviation},
                         {"relative_deviation", r.relative_deviation}});
}

// Methods as columns; rows are failure rate, tagging time and the deviation
// from the reference.
inline std::string render(const ComparisonTable& t) {
  std::ostringstream out;
  char cell[64];
  auto row = [&](const std::string& head, auto value) {
    std::snprintf(cell, sizeof cell, "%-22s", head.c_str());
    out << cell;
    for (const auto& r : t.rows) {
      std::snprintf(cell, sizeof cell, " %16s", value(r).c_str());
      out << cell;
    }
    out << '\n';
  };
  auto fmt = [](const char* f, double v) {
    char b[32];
    std::snprintf(b, sizeof b, f, v);
    return std::string(b);
  };
  row("", [](const ComparisonRow& r) { return r.method; });
  row("Failure Rate [1/a]", [&](const ComparisonRow& r) { return fmt("%.2f", r.failure_rate_per_year); });
  row("Tagging Time [h]", [&](const ComparisonRow& r) { return fmt("%.1f", r.effort_hours); });
  row("Deviation [%]", [&](const ComparisonRow& r) { return fmt("%+.1f", 100.0 * r.relative_deviation); });
  out << "(deviation relative to " << t.reference << ")\n";
  return out.str();
}

inline std::string render(const KpiReport& r) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %8s %10s %12s\n", "turbine", "C_F", "MTBF [d]", "rate [1/a]");
  out << line;
  for (const auto& s : r.per_turbine) {
    std::string mtbf_s = s.mtbf_days ? std::to_string(*s.mtbf_days).substr(0, 8) : "n/a";
    char rate[32] = "n/a";
    if (s.failure_rate_per_year) std::snprintf(rate, sizeof rate, "%.3f", *s.failure_rate_per_year);
    std::snprintf(line, sizeof line, "%-12s %8zu %10s %12s\n", s.turbine_id.c_str(), s.failure_count, mtbf_s.c_str(), rate);
    out << line;
  }
  if (r.fleet_failure_rate) {
    std::snprintf(line, sizeof line, "fleet failure rate (%s): %.3f 1/a\n", r.origin.label().c_str(), *r.fleet_failure_rate);
    out << line;
  }
  return out.str();
}

}  // namespace mwo::kpi
