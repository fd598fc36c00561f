#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mwo/corpus.hpp"
#include "mwo/csv.hpp"
#include "mwo/error.hpp"
#include "mwo/hash.hpp"
#include "mwo/features.hpp"
#include "mwo/text.hpp"

namespace mwo {

enum class TagEntity { problem, solution, item, ambiguous, irrelevant };

inline char entity_letter(TagEntity e) {
  switch (e) {
    case TagEntity::problem: return 'P';
    case TagEntity::solution: return 'S';
    case TagEntity::item: return 'I';
    case TagEntity::ambiguous: return 'U';
    case TagEntity::irrelevant: return 'X';
  }
  return 'X';
}

inline std::optional<TagEntity> parse_entity(std::string_view s) {
  if (s == "P" || s == "Problem") return TagEntity::problem;
  if (s == "S" || s == "Solution") return TagEntity::solution;
  if (s == "I" || s == "Item") return TagEntity::item;
  if (s == "U" || s == "Ambiguous") return TagEntity::ambiguous;
  if (s == "X" || s == "Irrelevant") return TagEntity::irrelevant;
  return std::nullopt;
}

// ISO-8601 UTC timestamps at second precision: 2024-01-31T08:15:00Z.
using Timestamp = std::chrono::sys_seconds;
using Clock = std::function<Timestamp()>;

inline Timestamp system_now() { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); }

inline std::string format_timestamp(Timestamp t) {
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z')
    return std::nullopt;
  auto date = parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  auto num = [&](std::size_t pos) -> int {
    if (s[pos] < '0' || s[pos] > '9' || s[pos + 1] < '0' || s[pos + 1] > '9') return -1;
    return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
  };
  int h = num(11), m = num(14), sec = num(17);
  if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 60) return std::nullopt;
  return Timestamp{*date} + std::chrono::hours{h} + std::chrono::minutes{m} + std::chrono::seconds{sec};
}

struct TagEntry {
  std::string alias;
  TagEntity entity;
  std::string tagged_at;

  friend bool operator==(const TagEntry&, const TagEntry&) = default;
};

// term -> (alias, entity). A term appears at most once.
class TagVocabulary {
 public:
  const std::map<std::string, TagEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& term) const { return entries_.count(term) > 0; }

  const TagEntry* find(const std::string& term) const {
    auto it = entries_.find(term);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void set(const std::string& term, TagEntry entry) { entries_[term] = std::move(entry); }

  // True when some term maps to `alias` with the given entity.
  bool has_alias(const std::string& alias, TagEntity entity) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& kv) { return kv.second.alias == alias && kv.second.entity == entity; });
  }

  friend bool operator==(const TagVocabulary&, const TagVocabulary&) = default;

 private:
  std::map<std::string, TagEntry> entries_;
};

// CSV `term,alias,entity,timestamp`, rows sorted by term.
inline void write_vocab_csv(std::ostream& out, const TagVocabulary& vocab) {
  csv::write_row(out, {"term", "alias", "entity", "timestamp"});
  for (const auto& [term, e] : vocab.entries())
    csv::write_row(out, {term, e.alias, std::string(1, entity_letter(e.entity)), e.tagged_at});
}

inline TagVocabulary parse_vocab_csv(std::string_view data) {
  auto rows = csv::parse(data);
  TagVocabulary vocab;
  if (rows.empty()) return vocab;
  const auto& header = rows.front();
  auto col = [&](const char* name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(std::string("vocabulary file lacks column ") + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  std::size_t c_term = col("term"), c_alias = col("alias"), c_entity = col("entity");
  auto ts_it = std::find(header.begin(), header.end(), "timestamp");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) throw Error("ragged vocabulary row", ErrorKind::validation, {{"line", r + 1}});
    auto entity = parse_entity(row[c_entity]);
    if (!entity) throw Error("invalid entity in vocabulary file: " + row[c_entity], ErrorKind::validation, {{"line", r + 1}});
    if (vocab.contains(row[c_term])) throw Error("duplicate term in vocabulary file: " + row[c_term]);
    std::string ts = ts_it == header.end() ? std::string() : row[static_cast<std::size_t>(ts_it - header.begin())];
    vocab.set(row[c_term], {row[c_alias], *entity, ts});
  }
  return vocab;
}

inline TagVocabulary load_vocab_csv(const std::filesystem::path& path) { return parse_vocab_csv(csv::read_file(path)); }

// ---------------------------------------------------------------------------
// Tagged corpus

struct Tag {
  std::string alias;
  TagEntity entity;

  friend auto operator<=>(const Tag&, const Tag&) = default;
};

struct TaggedDoc {
  std::string work_order_id;
  std::vector<std::string> tokens;
  std::map<Tag, std::vector<std::size_t>> tags;  // tag -> token positions
};

struct TaggedCorpus {
  std::vector<TaggedDoc> docs;

  // Order-sensitive hash of the work-order ids; rule reports refuse to mix
  // selections computed on different corpora.
  std::string fingerprint() const {
    Fnv1a h;
    for (const auto& d : docs) h.update(d.work_order_id).update(0x1F);
    return h.fingerprint(docs.size());
  }
};

// X-tagged terms are dropped; everything else becomes a (alias, entity) tag
// with the positions of its tokens.
inline TaggedCorpus apply_tags(const std::vector<TokenDoc>& docs, const TagVocabulary& vocab) {
  TaggedCorpus out;
  out.docs.reserve(docs.size());
  for (const auto& d : docs) {
    TaggedDoc td{d.work_order_id, d.tokens, {}};
    for (std::size_t i = 0; i < d.tokens.size(); ++i) {
      const TagEntry* e = vocab.find(d.tokens[i]);
      if (!e || e->entity == TagEntity::irrelevant) continue;
      td.tags[Tag{e->alias, e->entity}].push_back(i);
    }
    out.docs.push_back(std::move(td));
  }
  return out;
}

// Share of documents and token occurrences carrying an ambiguous (U) tag.
struct AmbiguityShare {
  double doc_fraction = 0.0;
  double occurrence_fraction = 0.0;
};

inline AmbiguityShare ambiguity_share(const TaggedCorpus& corpus) {
  AmbiguityShare s;
  std::size_t docs_with = 0, occ = 0, total = 0;
  for (const auto& d : corpus.docs) {
    total += d.tokens.size();
    bool any = false;
    for (const auto& [tag, pos] : d.tags)
      if (tag.entity == TagEntity::ambiguous) {
        any = true;
        occ += pos.size();
      }
    docs_with += any ? 1 : 0;
  }
  if (!corpus.docs.empty()) s.doc_fraction = static_cast<double>(docs_with) / static_cast<double>(corpus.docs.size());
  if (total) s.occurrence_fraction = static_cast<double>(occ) / static_cast<double>(total);
  return s;
}

inline void to_json(nlohmann::json& j, const TaggedCorpus& c) {
  j = nlohmann::json::array();
  for (const auto& d : c.docs) {
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& [tag, pos] : d.tags)
      tags.push_back({{"alias", tag.alias}, {"entity", std::string(1, entity_letter(tag.entity))}, {"positions", pos}});
    j.push_back({{"work_order_id", d.work_order_id}, {"tags", tags}});
  }
}

// ---------------------------------------------------------------------------
// Tagging session

struct EffortEvent {
  std::string timestamp;
  std::string action;  // open | close | assign | reassign | effort_override
  std::string term;
};

struct TermCard {
  std::string term;
  double score;
  std::size_t document_frequency;
  std::size_t rank;  // 0-based position in the global ranking
};

struct NextTerms {
  std::vector<TermCard> terms;
  double coverage = 0.0;
  std::size_t remaining = 0;
};

struct Suggestion {
  std::string term;
  double similarity;
};

struct SessionOptions {
  TermAggregate aggregate = TermAggregate::sum;
  IdfVariant idf = IdfVariant::plain;
  std::size_t min_df = 1;
  double similarity_threshold = 0.75;
};

// Single-writer human-in-the-loop tagging state. Every mutation is appended to
// the journal (when one is attached) before it becomes visible.
class TaggingSession {
 public:
  TaggingSession(std::vector<TokenDoc> docs, SessionOptions options = {}, Clock clock = system_now)
      : docs_(std::move(docs)), options_(options), clock_(std::move(clock)) {
    if (docs_.empty()) throw Error("cannot open a tagging session on an empty corpus");
    vocabulary_ = build_vocabulary(docs_, options_.min_df);
    ranking_ = corpus_term_scores(docs_, vocabulary_, options_.aggregate, options_.idf);
    occurrences_.assign(vocabulary_.size(), 0);
    for (const auto& d : docs_)
      for (const auto& t : d.tokens)
        if (auto i = vocabulary_.find(t)) {
          ++occurrences_[*i];
          ++total_occurrences_;
        }
  }

  // Replays an existing journal, then appends to it.
  void attach_journal(const std::filesystem::path& path) {
    if (std::filesystem::exists(path)) replay(path);
    journal_ = path;
  }

  void open() { record_session_event("open"); }
  void close() { record_session_event("close"); }

  const std::vector<TokenDoc>& docs() const { return docs_; }
  const FeatureVocabulary& vocabulary() const { return vocabulary_; }
  const TagVocabulary& tags() const { return tags_; }
  const std::vector<TermScore>& ranking() const { return ranking_; }
  const std::vector<EffortEvent>& events() const { return events_; }
  const SessionOptions& options() const { return options_; }
  std::uint64_t version() const { return version_; }

  double coverage() const {
    if (total_occurrences_ == 0) return 1.0;
    return static_cast<double>(covered_occurrences_) / static_cast<double>(total_occurrences_);
  }

  NextTerms next_terms(std::size_t n) const {
    NextTerms out;
    out.coverage = coverage();
    for (std::size_t r = 0; r < ranking_.size(); ++r) {
      const auto& ts = ranking_[r];
      if (tags_.contains(ts.term)) continue;
      ++out.remaining;
      if (out.terms.size() < n) out.terms.push_back({ts.term, ts.score, vocabulary_.document_frequency(ts.index), r});
    }
    return out;
  }

  std::vector<std::string> untagged_queue() const {
    std::vector<std::string> q;
    for (const auto& ts : ranking_)
      if (!tags_.contains(ts.term)) q.push_back(ts.term);
    return q;
  }

  std::vector<Suggestion> suggest_similar(const std::string& term, std::optional<double> threshold = std::nullopt) const {
    if (!vocabulary_.find(term))
      throw Error("unknown term: " + term, ErrorKind::not_found, {{"term", term}});
    double th = threshold.value_or(options_.similarity_threshold);
    if (!(th >= 0.0 && th <= 1.0)) throw Error("similarity threshold must lie in [0, 1]");
    std::vector<Suggestion> out;
    for (const auto& other : vocabulary_.terms()) {
      if (other == term || tags_.contains(other)) continue;
      double s = text::similarity(term, other);
      if (s >= th) out.push_back({other, s});
    }
    std::stable_sort(out.begin(), out.end(), [](const Suggestion& a, const Suggestion& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.term < b.term;
    });
    return out;
  }

  // Maps every term to (alias, entity). Fails with `conflict` when
  // expected_version is given and stale.
  std::uint64_t assign(const std::vector<std::string>& terms, const std::string& alias, TagEntity entity,
                       std::optional<std::uint64_t> expected_version = std::nullopt) {
    if (expected_version && *expected_version != version_)
      throw Error("vocabulary version changed", ErrorKind::conflict,
                  {{"expected_version", *expected_version}, {"current_version", version_}});
    auto [norm_terms, norm_alias] = validate_assignment(terms, alias, entity);
    Timestamp now = clock_();
    nlohmann::json rec = {{"type", "assign"}, {"ts", format_timestamp(now)}, {"terms", norm_terms},
                          {"alias", norm_alias}, {"entity", std::string(1, entity_letter(entity))}};
    append_journal(rec);
    apply_assignment(norm_terms, norm_alias, entity, now);
    return version_;
  }

  void set_effort_override(double hours) {
    if (!(hours >= 0.0)) throw Error("effort hours must be >= 0");
    Timestamp now = clock_();
    append_journal({{"type", "effort_override"}, {"ts", format_timestamp(now)}, {"hours", hours}});
    effort_override_ = hours;
    events_.push_back({format_timestamp(now), "effort_override", ""});
  }

  // Wall-clock hours between open and close events (an unclosed interval
  // ends at the latest event), unless a manual override was recorded.
  double effort_hours() const {
    if (effort_override_) return *effort_override_;
    double seconds = 0.0;
    std::optional<Timestamp> opened;
    std::optional<Timestamp> last;
    for (const auto& e : events_) {
      auto t = parse_timestamp(e.timestamp);
      if (!t) continue;
      last = *t;
      if (e.action == "open") {
        if (!opened) opened = *t;
      } else if (e.action == "close" && opened) {
        seconds += static_cast<double>((*t - *opened).count());
        opened.reset();
      }
    }
    if (opened && last) seconds += static_cast<double>((*last - *opened).count());
    return seconds / 3600.0;
  }

  TaggedCorpus apply() const { return apply_tags(docs_, tags_); }

 private:
  std::pair<std::vector<std::string>, std::string> validate_assignment(const std::vector<std::string>& terms,
                                                                       const std::string& alias, TagEntity entity) const {
    if (terms.empty()) throw Error("assign needs at least one term");
    std::vector<std::string> unknown;
    for (const auto& t : terms)
      if (!vocabulary_.find(t)) unknown.push_back(t);
    if (!unknown.empty()) throw Error("unknown terms", ErrorKind::validation, {{"unknown_terms", unknown}});
    std::string a = text::lowercase(alias);
    while (!a.empty() && (a.back() == ' ' || a.back() == '\t')) a.pop_back();
    while (!a.empty() && (a.front() == ' ' || a.front() == '\t')) a.erase(a.begin());
    if (a.empty() && entity != TagEntity::irrelevant)
      throw Error("alias must be non-empty unless the entity is X", ErrorKind::validation);
    std::set<std::string> uniq(terms.begin(), terms.end());
    return {std::vector<std::string>(uniq.begin(), uniq.end()), a};
  }

  void apply_assignment(const std::vector<std::string>& terms, const std::string& alias, TagEntity entity, Timestamp at) {
    std::string ts = format_timestamp(at);
    for (const auto& t : terms) {
      bool was_tagged = tags_.contains(t);
      if (!was_tagged) covered_occurrences_ += occurrences_[*vocabulary_.find(t)];
      tags_.set(t, {alias, entity, ts});
      events_.push_back({ts, was_tagged ? "reassign" : "assign", t});
    }
    ++version_;
  }

  void record_session_event(const char* action) {
    Timestamp now = clock_();
    append_journal({{"type", action}, {"ts", format_timestamp(now)}});
    events_.push_back({format_timestamp(now), action, ""});
  }

  void append_journal(const nlohmann::json& rec) {
    if (!journal_) return;
    std::ofstream out(*journal_, std::ios::app | std::ios::binary);
    if (!out) throw Error("cannot append to session journal: " + journal_->string(), ErrorKind::internal);
    out << rec.dump() << '\n';
    out.flush();
    if (!out) throw Error("failed writing session journal", ErrorKind::internal);
  }

  void replay(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        // A torn final line from a crash mid-write is ignored.
        if (in.peek() == EOF) break;
        throw Error("corrupt session journal", ErrorKind::internal, {{"line", line_no}});
      }
      const std::string type = rec.at("type").get<std::string>();
      const std::string ts = rec.at("ts").get<std::string>();
      if (type == "assign") {
        auto entity = parse_entity(rec.at("entity").get<std::string>());
        if (!entity) throw Error("corrupt session journal entity", ErrorKind::internal, {{"line", line_no}});
        auto when = parse_timestamp(ts);
        apply_assignment(rec.at("terms").get<std::vector<std::string>>(), rec.at("alias").get<std::string>(), *entity,
                         when.value_or(Timestamp{}));
      } else if (type == "effort_override") {
        effort_override_ = rec.at("hours").get<double>();
        events_.push_back({ts, type, ""});
      } else {
        events_.push_back({ts, type, ""});
      }
    }
  }

  std::vector<TokenDoc> docs_;
  SessionOptions options_;
  Clock clock_;
  FeatureVocabulary vocabulary_;
  std::vector<TermScore> ranking_;
  std::vector<std::size_t> occurrences_;
  std::size_t total_occurrences_ = 0;
  std::size_t covered_occurrences_ = 0;
  TagVocabulary tags_;
  std::vector<EffortEvent> events_;
  std::optional<double> effort_override_;
  std::optional<std::filesystem::path> journal_;
  std::uint64_t version_ = 0;
};

// Effort hours reconstructed from a session journal file, for the CLI.
inline double journal_effort_hours(const std::filesystem::path& journal, const std::vector<TokenDoc>& docs,
                                   SessionOptions options = {}) {
  TaggingSession s(docs, options);
  s.attach_journal(journal);
  return s.effort_hours();
}

}  // namespace mwo
