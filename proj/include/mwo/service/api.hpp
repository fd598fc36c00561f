#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mwo/error.hpp"
#include "mwo/kpi.hpp"
#include "mwo/rules.hpp"
#include "mwo/service/pipeline.hpp"
#include "mwo/tagging.hpp"

namespace mwo::service {

// One tagging session over a fixed corpus. The corpus is immutable; only the
// tag vocabulary changes, through assign(), under the exclusive lock.
struct SessionState {
  SessionState(std::string id_, std::vector<WorkOrder> orders_, Fleet fleet_, std::vector<TokenDoc> docs,
               std::string preprocess_fp, SessionOptions options = {}, Clock clock = system_now)
      : id(std::move(id_)),
        orders(std::move(orders_)),
        fleet(std::move(fleet_)),
        preprocess_fingerprint(std::move(preprocess_fp)),
        created_at(format_timestamp(clock())),
        session(std::move(docs), options, std::move(clock)) {}

  std::string id;
  std::vector<WorkOrder> orders;
  Fleet fleet;
  std::string preprocess_fingerprint;
  std::string created_at;
  TaggingSession session;
  RuleKpiRequest kpi_defaults;

  mutable std::shared_mutex mutex;
  mutable std::mutex cache_mutex;
  mutable std::map<rules::RuleId, std::pair<std::uint64_t, nlohmann::json>> kpi_cache;
};

// Live KPI preview for one rule; cached per vocabulary version. Caller holds
// at least a shared lock on the session.
inline nlohmann::json kpi_preview(const SessionState& s, rules::RuleId rule) {
  const auto version = s.session.version();
  {
    std::lock_guard lock(s.cache_mutex);
    auto it = s.kpi_cache.find(rule);
    if (it != s.kpi_cache.end() && it->second.first == version) return it->second.second;
  }
  RuleKpiRequest req = s.kpi_defaults;
  req.rule = rule;
  auto result = rule_kpi(s.orders, s.fleet, s.session.docs(), s.preprocess_fingerprint, s.session.tags(), req,
                         s.session.effort_hours());
  nlohmann::json payload = {
      {"vocabulary_version", version}, {"rule_summary", rule_summary(result.selection)}, {"report", result.report}};
  std::lock_guard lock(s.cache_mutex);
  s.kpi_cache[rule] = {version, payload};
  return payload;
}

inline int http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::validation: return 400;
    case ErrorKind::internal: return 500;
  }
  return 500;
}

inline nlohmann::json api_error(ErrorKind kind, const std::string& message, nlohmann::json detail = nullptr) {
  return {{"code", to_string(kind)}, {"message", message}, {"detail", std::move(detail)}};
}

class ApiServer {
 public:
  ApiServer() { install_routes(); }

  void add_session(std::unique_ptr<SessionState> s) {
    std::unique_lock lock(registry_mutex_);
    auto id = s->id;
    if (!sessions_.emplace(id, std::move(s)).second) throw Error("duplicate session id: " + id, ErrorKind::conflict);
  }

  SessionState& session(const std::string& id) {
    std::shared_lock lock(registry_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error("unknown session: " + id, ErrorKind::not_found, {{"session_id", id}});
    return *it->second;
  }

  // Returns the bound port (an ephemeral one when port == 0).
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    if (!server_.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
  }
  bool listen() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  httplib::Server& http() { return server_; }

 private:
  template <typename F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      reply(res, http_status(e.kind()), api_error(e.kind(), e.what(), e.detail()));
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, api_error(ErrorKind::validation, std::string("malformed JSON: ") + e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, api_error(ErrorKind::internal, e.what()));
    }
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static std::optional<std::uint64_t> optional_u64(const nlohmann::json& body, const char* key) {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    if (!body[key].is_number_unsigned()) throw Error(std::string(key) + " must be a non-negative integer", ErrorKind::validation);
    return body[key].get<std::uint64_t>();
  }

  void install_routes() {
    server_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      reply(res, res.status, api_error(ErrorKind::not_found, "no route for " + req.method + " " + req.path));
      return httplib::Server::HandlerResponse::Handled;
    });

    server_.Get(R"(/session/([^/]+)/terms)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        std::size_t n = 20;
        if (req.has_param("n")) {
          const auto v = req.get_param_value("n");
          if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
            throw Error("n must be a non-negative integer", ErrorKind::validation, {{"n", v}});
          n = std::stoul(v);
        }
        std::shared_lock lock(s.mutex);
        auto next = s.session.next_terms(n);
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& c : next.terms) {
          nlohmann::json similar = nlohmann::json::array();
          for (const auto& sg : s.session.suggest_similar(c.term)) similar.push_back({{"term", sg.term}, {"similarity", sg.similarity}});
          terms.push_back({{"term", c.term},
                           {"score", c.score},
                           {"document_frequency", c.document_frequency},
                           {"rank", c.rank},
                           {"suggested_similar", similar}});
        }
        reply(res, 200,
              {{"vocabulary_version", s.session.version()},
               {"coverage", next.coverage},
               {"remaining", next.remaining},
               {"terms", terms}});
      });
    });

    server_.Get(R"(/session/([^/]+)/similar/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        std::optional<double> threshold;
        if (req.has_param("threshold")) {
          try {
            threshold = std::stod(req.get_param_value("threshold"));
          } catch (const std::exception&) {
            throw Error("threshold must be a number", ErrorKind::validation);
          }
        }
        std::shared_lock lock(s.mutex);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& sg : s.session.suggest_similar(req.matches[2], threshold))
          out.push_back({{"term", sg.term}, {"similarity", sg.similarity}});
        reply(res, 200, {{"term", std::string(req.matches[2])}, {"suggestions", out}});
      });
    });

    server_.Post(R"(/session/([^/]+)/assign)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        auto body = nlohmann::json::parse(req.body);
        if (!body.is_object()) throw Error("request body must be a JSON object", ErrorKind::validation);
        if (!body.contains("terms") || !body["terms"].is_array())
          throw Error("terms must be an array of strings", ErrorKind::validation);
        auto terms = body["terms"].get<std::vector<std::string>>();
        const std::string alias = body.value("alias", "");
        const std::string entity_str = body.value("entity", "");
        auto entity = parse_entity(entity_str);
        if (!entity)
          throw Error("entity must be one of P, S, I, U, X", ErrorKind::validation, {{"entity", entity_str}});
        auto expected = optional_u64(body, "expected_version");
        std::unique_lock lock(s.mutex);
        auto version = s.session.assign(terms, alias, *entity, expected);
        reply(res, 200, {{"vocabulary_version", version}, {"coverage", s.session.coverage()}});
      });
    });

    server_.Get(R"(/session/([^/]+)/progress)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        std::shared_lock lock(s.mutex);
        reply(res, 200,
              {{"session_id", s.id},
               {"created_at", s.created_at},
               {"vocabulary_version", s.session.version()},
               {"coverage", s.session.coverage()},
               {"tagged_terms", s.session.tags().size()},
               {"total_terms", s.session.vocabulary().size()},
               {"remaining_terms", s.session.vocabulary().size() - s.session.tags().size()},
               {"effort_hours", s.session.effort_hours()}});
      });
    });

    server_.Post(R"(/session/([^/]+)/apply)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        std::shared_lock lock(s.mutex);
        auto tagged = s.session.apply();
        auto amb = ambiguity_share(tagged);
        nlohmann::json body = {{"vocabulary_version", s.session.version()},
                               {"corpus_fingerprint", tagged.fingerprint()},
                               {"ambiguity", {{"doc_fraction", amb.doc_fraction}, {"occurrence_fraction", amb.occurrence_fraction}}}};
        try {
          std::vector<rules::RuleSelection> sel;
          for (auto r : rules::kAllRules)
            sel.push_back(rules::select(r, tagged, s.kpi_defaults.failure_alias, s.kpi_defaults.negation, &s.session.tags()));
          body["rule_report"] = rules::rule_report(sel, tagged.docs.size());
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::validation) throw;
          body["rule_report"] = nullptr;
          body["rule_report_unavailable"] = e.what();
        }
        if (req.has_param("include_docs") && req.get_param_value("include_docs") == "1") body["tagged_corpus"] = tagged;
        reply(res, 200, body);
      });
    });

    server_.Get(R"(/session/([^/]+)/kpi)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        const auto rule_str = req.has_param("rule") ? req.get_param_value("rule") : std::string("R4");
        auto rule = rules::parse_rule(rule_str);
        if (!rule) throw Error("rule must be one of R1..R4", ErrorKind::validation, {{"rule", rule_str}});
        std::shared_lock lock(s.mutex);
        reply(res, 200, kpi_preview(s, *rule));
      });
    });

    // Expert labels (when the corpus has any) against every rule that can
    // currently be evaluated.
    server_.Get(R"(/session/([^/]+)/compare)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        std::shared_lock lock(s.mutex);
        std::vector<kpi::NamedReport> reports;
        nlohmann::json skipped = nlohmann::json::array();
        try {
          reports.push_back({"expert_labels", kpi::compute_kpi(s.orders, s.fleet, kpi::ExpertLabels{}, 0.0, s.kpi_defaults.kpi)});
        } catch (const Error& e) {
          skipped.push_back({{"method", "expert_labels"}, {"message", e.what()}});
        }
        for (auto r : rules::kAllRules) {
          try {
            reports.push_back({std::string("rule:") + rules::to_string(r), kpi_preview(s, r).at("report").get<kpi::KpiReport>()});
          } catch (const Error& e) {
            skipped.push_back({{"method", std::string("rule:") + rules::to_string(r)}, {"message", e.what()}});
          }
        }
        nlohmann::json body = {{"vocabulary_version", s.session.version()}, {"skipped", skipped}};
        body["table"] = reports.size() >= 2 ? nlohmann::json(kpi::compare(reports)) : nlohmann::json(nullptr);
        reply(res, 200, body);
      });
    });

    server_.Get(R"(/session/([^/]+)/export/vocab)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto& s = session(req.matches[1]);
        std::shared_lock lock(s.mutex);
        res.status = 200;
        res.set_header("X-Vocabulary-Version", std::to_string(s.session.version()));
        res.set_content(vocabulary_csv(s.session.tags()), "text/csv; charset=utf-8");
      });
    });
  }

  httplib::Server server_;
  std::shared_mutex registry_mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
};

// Endpoint description served to the UI and written to docs/.
inline nlohmann::json openapi_document() {
  using nlohmann::json;
  auto ref = [](const char* name) { return json{{"$ref", std::string("#/components/schemas/") + name}}; };
  auto ok = [](const char* desc, json schema) {
    return json{{"description", desc}, {"content", {{"application/json", {{"schema", std::move(schema)}}}}}};
  };
  auto err = [&](const char* desc) {
    return json{{"description", desc}, {"content", {{"application/json", {{"schema", ref("ApiError")}}}}}};
  };
  json session_param = {{"name", "id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}};
  json term_card = {{"type", "object"},
                    {"properties",
                     {{"term", {{"type", "string"}}},
                      {"score", {{"type", "number"}}},
                      {"document_frequency", {{"type", "integer"}}},
                      {"rank", {{"type", "integer"}}},
                      {"suggested_similar", {{"type", "array"}, {"items", ref("Suggestion")}}}}}};

  json paths;
  paths["/session/{id}/terms"]["get"] = {
      {"summary", "Next untagged terms by corpus score"},
      {"parameters", {session_param, {{"name", "n"}, {"in", "query"}, {"schema", {{"type", "integer"}, {"default", 20}}}}}},
      {"responses",
       {{"200", ok("Ranked term queue",
                   {{"type", "object"},
                    {"properties",
                     {{"vocabulary_version", {{"type", "integer"}}},
                      {"coverage", {{"type", "number"}}},
                      {"remaining", {{"type", "integer"}}},
                      {"terms", {{"type", "array"}, {"items", term_card}}}}}})},
        {"404", err("Unknown session")}}}};
  paths["/session/{id}/similar/{term}"]["get"] = {
      {"summary", "Untagged terms within the similarity threshold"},
      {"parameters",
       {session_param,
        {{"name", "term"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "string"}}}},
        {{"name", "threshold"}, {"in", "query"}, {"schema", {{"type", "number"}, {"default", 0.75}}}}}},
      {"responses",
       {{"200", ok("Suggestions", {{"type", "object"},
                                   {"properties",
                                    {{"term", {{"type", "string"}}},
                                     {"suggestions", {{"type", "array"}, {"items", ref("Suggestion")}}}}}})},
        {"404", err("Unknown session or term")}}}};
  paths["/session/{id}/assign"]["post"] = {
      {"summary", "Map terms to an alias and entity (journaled)"},
      {"parameters", {session_param}},
      {"requestBody",
       {{"required", true},
        {"content",
         {{"application/json",
           {{"schema",
             {{"type", "object"},
              {"required", {"terms", "alias", "entity"}},
              {"properties",
               {{"terms", {{"type", "array"}, {"items", {{"type", "string"}}}}},
                {"alias", {{"type", "string"}}},
                {"entity", {{"type", "string"}, {"enum", {"P", "S", "I", "U", "X"}}}},
                {"expected_version", {{"type", "integer"}}}}}}}}}}}}},
      {"responses",
       {{"200", ok("New vocabulary version", {{"type", "object"},
                                              {"properties",
                                               {{"vocabulary_version", {{"type", "integer"}}},
                                                {"coverage", {{"type", "number"}}}}}})},
        {"400", err("Invalid entity, alias or terms")},
        {"404", err("Unknown session")},
        {"409", err("expected_version is stale")}}}};
  paths["/session/{id}/progress"]["get"] = {
      {"summary", "Coverage and effort"},
      {"parameters", {session_param}},
      {"responses",
       {{"200", ok("Progress", {{"type", "object"},
                                {"properties",
                                 {{"session_id", {{"type", "string"}}},
                                  {"created_at", {{"type", "string"}, {"format", "date-time"}}},
                                  {"vocabulary_version", {{"type", "integer"}}},
                                  {"coverage", {{"type", "number"}}},
                                  {"tagged_terms", {{"type", "integer"}}},
                                  {"total_terms", {{"type", "integer"}}},
                                  {"remaining_terms", {{"type", "integer"}}},
                                  {"effort_hours", {{"type", "number"}}}}}})},
        {"404", err("Unknown session")}}}};
  paths["/session/{id}/apply"]["post"] = {
      {"summary", "Tag the corpus with the current vocabulary (read-only)"},
      {"parameters", {session_param, {{"name", "include_docs"}, {"in", "query"}, {"schema", {{"type", "integer"}, {"enum", {0, 1}}}}}}},
      {"responses",
       {{"200", ok("Tagging summary and rule report", {{"type", "object"}})}, {"404", err("Unknown session")}}}};
  paths["/session/{id}/kpi"]["get"] = {
      {"summary", "Live failure-rate preview for one rule"},
      {"parameters",
       {session_param,
        {{"name", "rule"}, {"in", "query"}, {"schema", {{"type", "string"}, {"enum", {"R1", "R2", "R3", "R4"}}, {"default", "R4"}}}}}},
      {"responses",
       {{"200", ok("KPI preview", {{"type", "object"},
                                   {"properties",
                                    {{"vocabulary_version", {{"type", "integer"}}},
                                     {"rule_summary", {{"type", "object"}}},
                                     {"report", ref("KpiReport")}}}})},
        {"400", err("Rule not evaluable (e.g. no failure alias yet)")},
        {"404", err("Unknown session")}}}};
  paths["/session/{id}/compare"]["get"] = {
      {"summary", "Expert labels against each evaluable rule"},
      {"parameters", {session_param}},
      {"responses", {{"200", ok("Comparison table", {{"type", "object"}})}, {"404", err("Unknown session")}}}};
  paths["/session/{id}/export/vocab"]["get"] = {
      {"summary", "Tag vocabulary as CSV term,alias,entity,timestamp"},
      {"parameters", {session_param}},
      {"responses",
       {{"200", {{"description", "Vocabulary CSV"}, {"content", {{"text/csv", {{"schema", {{"type", "string"}}}}}}}}},
        {"404", err("Unknown session")}}}};

  json schemas;
  schemas["ApiError"] = {{"type", "object"},
                         {"required", {"code", "message", "detail"}},
                         {"properties",
                          {{"code", {{"type", "string"}, {"enum", {"not_found", "conflict", "validation", "internal"}}}},
                           {"message", {{"type", "string"}}},
                           {"detail", json::object()}}}};
  schemas["Suggestion"] = {{"type", "object"},
                           {"properties", {{"term", {{"type", "string"}}}, {"similarity", {{"type", "number"}}}}}};
  schemas["KpiReport"] = {
      {"type", "object"},
      {"properties",
       {{"origin", {{"type", "string"}}},
        {"per_turbine", {{"type", "array"}, {"items", {{"type", "object"}}}}},
        {"fleet_failure_rate", {{"type", {"number", "null"}}}},
        {"excluded_turbines", {{"type", "array"}, {"items", {{"type", "string"}}}}},
        {"effort_hours", {{"type", "number"}}},
        {"window_fingerprint", {{"type", "string"}}},
        {"config_snapshot", {{"type", "object"}}}}}};

  return {{"openapi", "3.0.3"},
          {"info", {{"title", "MWO tagging service"}, {"version", "1.0.0"}}},
          {"paths", paths},
          {"components", {{"schemas", schemas}}}};
}

}  // namespace mwo::service
