#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mwo/config.hpp"
#include "mwo/csv.hpp"
#include "mwo/date.hpp"
#include "mwo/error.hpp"
#include "mwo/hash.hpp"
#include "mwo/text.hpp"
#include "mwo/zeus.hpp"

namespace mwo {

struct WorkOrder {
  std::string id;
  std::string turbine_id;
  Date start_date;
  std::string description;
  std::optional<ZeusCode> zeus_code;
};

// Observation window of one turbine. The first failure interval is measured
// from operation_start().
struct FleetMeta {
  std::string turbine_id;
  Date commissioning_date;
  Date observation_start;
  Date observation_end;

  Date operation_start() const { return std::max(commissioning_date, observation_start); }
  bool contains(Date d) const { return d >= observation_start && d <= observation_end; }
};

using Fleet = std::map<std::string, FleetMeta>;

struct ColumnMapping {
  std::string work_order_id = "work_order_id";
  std::string turbine_id = "turbine_id";
  std::string start_date = "start_date";
  std::string description = "description";
  std::string zeus_code = "zeus_code";

  // Keys `column.<canonical name> = <header in the file>`.
  static ColumnMapping from_config(const KeyValueConfig& cfg) {
    ColumnMapping m;
    m.work_order_id = cfg.get_or("column.work_order_id", m.work_order_id);
    m.turbine_id = cfg.get_or("column.turbine_id", m.turbine_id);
    m.start_date = cfg.get_or("column.start_date", m.start_date);
    m.description = cfg.get_or("column.description", m.description);
    m.zeus_code = cfg.get_or("column.zeus_code", m.zeus_code);
    return m;
  }
};

struct IngestIssue {
  std::size_t line = 0;  // 1-based record number, header is record 1
  std::string work_order_id;
  std::string reason;  // invalid_date | invalid_zeus_code | missing_id | ragged_row
  std::string value;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t accepted = 0;
  std::vector<IngestIssue> rejected;
};

struct Corpus {
  std::vector<WorkOrder> orders;
  IngestReport report;
};

inline void to_json(nlohmann::json& j, const IngestReport& r) {
  j = {{"rows_read", r.rows_read}, {"accepted", r.accepted}, {"rejected", nlohmann::json::array()}};
  for (const auto& issue : r.rejected)
    j["rejected"].push_back(
        {{"line", issue.line}, {"work_order_id", issue.work_order_id}, {"reason", issue.reason}, {"value", issue.value}});
}

namespace detail {

inline std::size_t require_column(const csv::Row& header, const std::string& name, std::vector<std::string>& missing) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    missing.push_back(name);
    return 0;
  }
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace detail

inline Corpus ingest_csv_text(std::string_view data, const ColumnMapping& mapping = {}) {
  auto rows = csv::parse(data);
  if (rows.empty())
    throw Error("missing mandatory columns", ErrorKind::validation,
                {{"missing_columns", {mapping.work_order_id, mapping.turbine_id, mapping.start_date, mapping.description}}});

  const csv::Row& header = rows.front();
  std::vector<std::string> missing;
  std::size_t c_id = detail::require_column(header, mapping.work_order_id, missing);
  std::size_t c_wt = detail::require_column(header, mapping.turbine_id, missing);
  std::size_t c_date = detail::require_column(header, mapping.start_date, missing);
  std::size_t c_desc = detail::require_column(header, mapping.description, missing);
  if (!missing.empty())
    throw Error("missing mandatory columns", ErrorKind::validation, {{"missing_columns", missing}});
  std::optional<std::size_t> c_zeus;
  if (auto it = std::find(header.begin(), header.end(), mapping.zeus_code); it != header.end())
    c_zeus = static_cast<std::size_t>(it - header.begin());

  Corpus corpus;
  std::map<std::string, std::size_t> seen;
  std::set<std::string> duplicates;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    ++corpus.report.rows_read;
    auto reject = [&](std::string id, std::string reason, std::string value) {
      corpus.report.rejected.push_back({r + 1, std::move(id), std::move(reason), std::move(value)});
    };
    if (row.size() != header.size()) {
      reject(row.size() > c_id ? row[c_id] : "", "ragged_row", std::to_string(row.size()) + " fields");
      continue;
    }
    const std::string& id = row[c_id];
    if (id.empty()) {
      reject("", "missing_id", "");
      continue;
    }
    if (seen.count(id)) duplicates.insert(id);
    seen[id] = r;

    auto date = parse_date(row[c_date]);
    if (!date) {
      reject(id, "invalid_date", row[c_date]);
      continue;
    }
    std::optional<ZeusCode> code;
    if (c_zeus && !row[*c_zeus].empty()) {
      code = ZeusCode::parse(row[*c_zeus]);
      if (!code) {
        reject(id, "invalid_zeus_code", row[*c_zeus]);
        continue;
      }
    }
    corpus.orders.push_back({id, row[c_wt], *date, row[c_desc], code});
  }
  if (!duplicates.empty())
    throw Error("duplicate work order ids", ErrorKind::validation,
                {{"duplicate_ids", std::vector<std::string>(duplicates.begin(), duplicates.end())}});
  corpus.report.accepted = corpus.orders.size();
  return corpus;
}

inline Corpus ingest_csv(const std::filesystem::path& path, const ColumnMapping& mapping = {}) {
  if (!std::filesystem::exists(path))
    throw Error("input file does not exist: " + path.string(), ErrorKind::not_found, {{"path", path.string()}});
  return ingest_csv_text(csv::read_file(path), mapping);
}

inline void write_corpus_csv(std::ostream& out, const std::vector<WorkOrder>& orders) {
  csv::write_row(out, {"work_order_id", "turbine_id", "start_date", "description", "zeus_code"});
  for (const auto& o : orders)
    csv::write_row(out, {o.id, o.turbine_id, format_date(o.start_date), o.description,
                         o.zeus_code ? std::string(o.zeus_code->code()) : std::string()});
}

inline Fleet parse_fleet_csv(std::string_view data) {
  auto rows = csv::parse(data);
  if (rows.empty()) throw Error("fleet metadata file is empty");
  const csv::Row& header = rows.front();
  std::vector<std::string> missing;
  std::size_t c_wt = detail::require_column(header, "turbine_id", missing);
  std::size_t c_comm = detail::require_column(header, "commissioning_date", missing);
  std::size_t c_start = detail::require_column(header, "observation_start", missing);
  std::size_t c_end = detail::require_column(header, "observation_end", missing);
  if (!missing.empty())
    throw Error("missing fleet metadata columns", ErrorKind::validation, {{"missing_columns", missing}});

  Fleet fleet;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw Error("ragged fleet metadata row", ErrorKind::validation, {{"line", r + 1}});
    auto comm = parse_date(row[c_comm]);
    auto start = parse_date(row[c_start]);
    auto end = parse_date(row[c_end]);
    if (!comm || !start || !end)
      throw Error("invalid date in fleet metadata", ErrorKind::validation, {{"line", r + 1}, {"turbine_id", row[c_wt]}});
    if (!(*comm <= *start && *start < *end))
      throw Error("fleet window must satisfy commissioning <= observation_start < observation_end",
                  ErrorKind::validation, {{"turbine_id", row[c_wt]}});
    if (fleet.count(row[c_wt]))
      throw Error("duplicate turbine in fleet metadata", ErrorKind::validation, {{"turbine_id", row[c_wt]}});
    fleet[row[c_wt]] = FleetMeta{row[c_wt], *comm, *start, *end};
  }
  return fleet;
}

inline Fleet load_fleet(const std::filesystem::path& path) { return parse_fleet_csv(csv::read_file(path)); }

inline void write_fleet_csv(std::ostream& out, const Fleet& fleet) {
  csv::write_row(out, {"turbine_id", "commissioning_date", "observation_start", "observation_end"});
  for (const auto& [id, m] : fleet)
    csv::write_row(out, {id, format_date(m.commissioning_date), format_date(m.observation_start),
                         format_date(m.observation_end)});
}

// ---------------------------------------------------------------------------
// Word lists and preprocessing

using WordSet = std::set<std::string>;

// One token per line; `#` starts a comment; entries are lowercased.
inline WordSet parse_word_list(std::string_view data) {
  WordSet words;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string_view::npos) eol = data.size();
    std::string_view line = data.substr(pos, eol - pos);
    pos = eol + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (!line.empty()) words.insert(text::lowercase(line));
  }
  return words;
}

inline WordSet load_word_list(const std::filesystem::path& path) { return parse_word_list(csv::read_file(path)); }

struct TokenDoc {
  std::string work_order_id;
  std::vector<std::string> tokens;

  friend bool operator==(const TokenDoc&, const TokenDoc&) = default;
};

struct DropReport {
  std::vector<std::string> dropped_ids;  // reason: empty_after_cleaning
};

struct PreprocessResult {
  std::vector<TokenDoc> docs;
  DropReport dropped;
};

inline void to_json(nlohmann::json& j, const DropReport& r) {
  j = {{"dropped_count", r.dropped_ids.size()}, {"dropped", nlohmann::json::array()}};
  for (const auto& id : r.dropped_ids) j["dropped"].push_back({{"work_order_id", id}, {"reason", "empty_after_cleaning"}});
}

class Preprocessor {
 public:
  Preprocessor() = default;
  Preprocessor(WordSet stopwords, WordSet junkwords) : stopwords_(std::move(stopwords)), junkwords_(std::move(junkwords)) {}

  // Lowercase, collapse whitespace, delete punctuation, delete digits.
  static std::string clean(std::string_view description) {
    std::u32string cps = text::decode_utf8(description);
    std::u32string lowered;
    lowered.reserve(cps.size());
    for (char32_t c : cps) lowered.push_back(text::to_lower(c));

    std::u32string spaced;
    spaced.reserve(lowered.size());
    for (char32_t c : lowered) {
      if (text::is_space(c)) {
        if (!spaced.empty() && spaced.back() != U' ') spaced.push_back(U' ');
      } else {
        spaced.push_back(c);
      }
    }
    if (!spaced.empty() && spaced.back() == U' ') spaced.pop_back();

    std::u32string no_punct;
    no_punct.reserve(spaced.size());
    for (char32_t c : spaced)
      if (c == U' ' || text::is_letter(c) || text::is_digit(c)) no_punct.push_back(c);

    std::u32string no_digits;
    no_digits.reserve(no_punct.size());
    for (char32_t c : no_punct)
      if (!text::is_digit(c)) no_digits.push_back(c);
    return text::encode_utf8(no_digits);
  }

  std::vector<std::string> tokenize(std::string_view description) const {
    std::string cleaned = clean(description);
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos < cleaned.size()) {
      std::size_t sp = cleaned.find(' ', pos);
      if (sp == std::string::npos) sp = cleaned.size();
      if (sp > pos) tokens.emplace_back(cleaned.substr(pos, sp - pos));
      pos = sp + 1;
    }
    std::erase_if(tokens, [&](const std::string& t) { return junkwords_.count(t) > 0; });
    std::erase_if(tokens, [&](const std::string& t) { return stopwords_.count(t) > 0; });
    return tokens;
  }

  PreprocessResult run(const std::vector<WorkOrder>& orders) const {
    PreprocessResult result;
    for (const auto& o : orders) {
      auto tokens = tokenize(o.description);
      if (tokens.empty())
        result.dropped.dropped_ids.push_back(o.id);
      else
        result.docs.push_back({o.id, std::move(tokens)});
    }
    return result;
  }

  const WordSet& stopwords() const { return stopwords_; }
  const WordSet& junkwords() const { return junkwords_; }

  // Content hash of both lists; goes into model metadata and KPI snapshots.
  std::string fingerprint() const {
    Fnv1a h;
    auto mix = [&](std::string_view s) { h.update(s).update(0xFF); };
    for (const auto& w : stopwords_) mix(w);
    mix("|");
    for (const auto& w : junkwords_) mix(w);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
    return buf;
  }

 private:
  WordSet stopwords_;
  WordSet junkwords_;
};

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace mwo
