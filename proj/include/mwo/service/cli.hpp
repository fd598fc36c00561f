#pragma once

#include <pthread.h>

#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mwo/classify/model.hpp"
#include "mwo/config.hpp"
#include "mwo/corpus.hpp"
#include "mwo/kpi.hpp"
#include "mwo/rules.hpp"
#include "mwo/service/api.hpp"
#include "mwo/service/pipeline.hpp"
#include "mwo/synth.hpp"
#include "mwo/tagging.hpp"

namespace mwo::service {

// Bad or missing arguments that CLI11 itself cannot detect; exits with 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  std::vector<std::string> stopwords;
  std::vector<std::string> junkwords;
  KeyValueConfig config;

  Preprocessor preprocessor() const {
    auto paths = default_word_lists();
    if (!stopwords.empty()) paths.stopwords.assign(stopwords.begin(), stopwords.end());
    if (!junkwords.empty()) paths.junkwords.assign(junkwords.begin(), junkwords.end());
    return make_preprocessor(paths);
  }

  ColumnMapping columns() const { return ColumnMapping::from_config(config); }
};

namespace cli_detail {

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

inline Corpus load_corpus(const std::string& path, const CommonOptions& common, std::ostream& err) {
  auto corpus = ingest_csv(path, common.columns());
  if (!corpus.report.rejected.empty())
    err << "warning: " << corpus.report.rejected.size() << " row(s) rejected while reading " << path << "\n";
  return corpus;
}

inline void emit_json(const nlohmann::json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty())
    out << j.dump(2) << "\n";
  else
    write_text_file(out_path, j.dump(2) + "\n");
}

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(text::lowercase(item));
  return out;
}

// Blocks SIGINT/SIGTERM for the process and stops the server when one
// arrives.
inline void serve_until_signal(ApiServer& server) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
}

}  // namespace cli_detail

// Parses and runs one subcommand. Returns the process exit status: 0 on
// success, 1 on pipeline failure, 2 on usage errors.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CommonOptions common;

  // --config is read before parsing so its values can become flag defaults.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) common.config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) common.config_path = args[i].substr(9);
  }
  try {
    if (!common.config_path.empty()) common.config = KeyValueConfig::load(common.config_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"Maintenance work order KPI workbench", "mwo"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", common.config_path, "key = value file; keys are <flag> or <subcommand>.<flag>");
  auto* seed_opt = app.add_option("--seed", common.seed, "Master seed for every random choice");
  if (auto v = common.config.get("seed")) seed_opt->default_val(*v);
  app.add_option("--stopwords", common.stopwords, "Stopword list file(s); default: shipped EN+DE lists");
  app.add_option("--junkwords", common.junkwords, "Junk word list file(s)");

  // Adds --<name> bound to `var` with a default taken from the config file.
  auto flag = [&](CLI::App* sub, const std::string& name, auto& var, const std::string& desc) {
    auto* o = sub->add_option("--" + name, var, desc);
    if (auto v = common.config.get(sub->get_name() + "." + name))
      o->default_val(*v);
    else if (auto g = common.config.get(name))
      o->default_val(*g);
    return o;
  };

  // ingest ------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Validate a work-order CSV and write it in canonical form");
  std::string ingest_in, ingest_out, ingest_report;
  flag(ingest, "input", ingest_in, "Raw work-order CSV");
  flag(ingest, "out", ingest_out, "Canonical CSV output");
  flag(ingest, "report", ingest_report, "Ingest report JSON (default: stdout)");
  ingest->callback([&] {
    require(ingest_in, "--input");
    auto corpus = ingest_csv(ingest_in, common.columns());
    if (!ingest_out.empty()) {
      std::ostringstream s;
      write_corpus_csv(s, corpus.orders);
      write_text_file(ingest_out, s.str());
    }
    emit_json(corpus.report, ingest_report, out);
  });

  // preprocess --------------------------------------------------------------
  auto* prep = app.add_subcommand("preprocess", "Clean, tokenize and filter descriptions");
  std::string prep_corpus, prep_out, prep_report;
  flag(prep, "corpus", prep_corpus, "Work-order CSV");
  flag(prep, "out", prep_out, "Token documents as JSON lines");
  flag(prep, "report", prep_report, "Drop report JSON (default: stdout)");
  prep->callback([&] {
    require(prep_corpus, "--corpus");
    auto corpus = load_corpus(prep_corpus, common, err);
    auto pp = common.preprocessor();
    auto result = pp.run(corpus.orders);
    if (!prep_out.empty()) {
      std::string lines;
      for (const auto& d : result.docs)
        lines += nlohmann::json{{"work_order_id", d.work_order_id}, {"tokens", d.tokens}}.dump() + "\n";
      write_text_file(prep_out, lines);
    }
    nlohmann::json rep = result.dropped;
    rep["documents"] = result.docs.size();
    rep["preprocess_fingerprint"] = pp.fingerprint();
    emit_json(rep, prep_report, out);
  });

  // train -------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a ZEUS classifier on expert-labeled orders");
  std::string train_corpus, train_out = "model.json", model_name = "lr", over_name = "ro", idf_name = "plain", feat_name;
  classify::TrainConfig tcfg;
  flag(train, "corpus", train_corpus, "Labeled work-order CSV");
  flag(train, "out", train_out, "Model file")->capture_default_str();
  flag(train, "model", model_name, "nb | lr")->check(CLI::IsMember({"nb", "lr"}))->capture_default_str();
  flag(train, "oversample", over_name, "none | ro | smote")->check(CLI::IsMember({"none", "ro", "smote"}))->capture_default_str();
  flag(train, "test-fraction", tcfg.test_fraction, "Held-out share per class")->capture_default_str();
  flag(train, "min-df", tcfg.min_df, "Drop terms in fewer documents")->capture_default_str();
  flag(train, "k-neighbors", tcfg.k_neighbors, "SMOTE neighbours")->capture_default_str();
  flag(train, "alpha", tcfg.nb_alpha, "Naive Bayes additive smoothing")->capture_default_str();
  flag(train, "l2", tcfg.lr.l2_lambda, "LR L2 penalty")->capture_default_str();
  flag(train, "learning-rate", tcfg.lr.learning_rate, "LR gradient step")->capture_default_str();
  flag(train, "max-epochs", tcfg.lr.max_epochs, "LR epoch cap")->capture_default_str();
  flag(train, "tol", tcfg.lr.tol, "LR loss-improvement tolerance")->capture_default_str();
  flag(train, "idf", idf_name, "plain | smooth")->check(CLI::IsMember({"plain", "smooth"}))->capture_default_str();
  flag(train, "features", feat_name, "count | tfidf (default: count for nb, tfidf for lr)")
      ->check(CLI::IsMember({"", "count", "tfidf"}));
  train->callback([&] {
    require(train_corpus, "--corpus");
    auto corpus = load_corpus(train_corpus, common, err);
    auto pp = common.preprocessor();
    auto prep = pp.run(corpus.orders);
    tcfg.model = classify::parse_model_type(model_name);
    tcfg.oversampler = classify::parse_oversampler(over_name);
    tcfg.idf = parse_idf_variant(idf_name);
    if (!feat_name.empty()) tcfg.features = feat_name == "count" ? Weighting::count : Weighting::tfidf;
    tcfg.seed = common.seed;
    auto result = classify::train_classifier(prep.docs, corpus.orders, tcfg, pp.fingerprint());
    for (const auto& w : result.model.warnings) err << "warning: " << w << "\n";
    classify::save_model(result.model, train_out);
    out << "model " << classify::to_string(tcfg.model) << " trained on " << result.dataset.train.size()
        << " orders (" << result.augmented.data.size() << " after oversampling), " << result.model.vocabulary.size()
        << " terms -> " << train_out << "\n";
  });

  // evaluate ----------------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "Score a model on its held-out partition");
  std::string eval_corpus, eval_model, eval_out;
  std::size_t min_support = 1;
  flag(eval, "corpus", eval_corpus, "Labeled work-order CSV used for training");
  flag(eval, "model", eval_model, "Model file");
  flag(eval, "min-support", min_support, "Classes with fewer test orders are dropped")->capture_default_str();
  flag(eval, "out", eval_out, "Metrics JSON");
  eval->callback([&] {
    require(eval_corpus, "--corpus");
    require(eval_model, "--model");
    auto corpus = load_corpus(eval_corpus, common, err);
    auto model = classify::load_model(eval_model);
    auto pp = common.preprocessor();
    if (pp.fingerprint() != model.preprocess_fingerprint)
      err << "warning: word lists differ from the ones used in training\n";
    auto report = classify::evaluate_model(model, pp.run(corpus.orders).docs, corpus.orders, min_support);
    out << classify::render_class_table(report);
    if (!eval_out.empty()) write_text_file(eval_out, nlohmann::json(report).dump(2) + "\n");
  });

  // classify ----------------------------------------------------------------
  auto* cls = app.add_subcommand("classify", "Predict ZEUS classes for every order");
  std::string cls_corpus, cls_model, cls_out;
  flag(cls, "corpus", cls_corpus, "Work-order CSV (labels optional)");
  flag(cls, "model", cls_model, "Model file");
  flag(cls, "out", cls_out, "Predictions CSV (default: stdout)");
  cls->callback([&] {
    require(cls_corpus, "--corpus");
    require(cls_model, "--model");
    auto corpus = load_corpus(cls_corpus, common, err);
    auto model = classify::load_model(cls_model);
    auto pp = common.preprocessor();
    if (pp.fingerprint() != model.preprocess_fingerprint)
      err << "warning: word lists differ from the ones used in training\n";
    auto prep = pp.run(corpus.orders);
    auto preds = model.predict(prep.docs);
    std::ostringstream s;
    write_predictions_csv(s, prep.docs, preds, model.classes());
    if (cls_out.empty())
      out << s.str();
    else
      write_text_file(cls_out, s.str());
  });

  // kpi ---------------------------------------------------------------------
  auto* kpi_cmd = app.add_subcommand("kpi", "Failure rate per turbine and fleet");
  std::string kpi_source = "expert", kpi_corpus, kpi_fleet, kpi_pred, kpi_model_id, kpi_rule = "R4", kpi_vocab, kpi_journal,
              kpi_out, failure_alias = "failure", cues;
  std::optional<double> effort_hours;
  std::size_t neg_window = 3;
  kpi::KpiOptions kopt;
  flag(kpi_cmd, "source", kpi_source, "expert | classifier | rule")
      ->check(CLI::IsMember({"expert", "classifier", "rule"}))
      ->capture_default_str();
  flag(kpi_cmd, "corpus", kpi_corpus, "Work-order CSV");
  flag(kpi_cmd, "fleet", kpi_fleet, "Fleet CSV turbine_id,commissioning_date,observation_start,observation_end");
  flag(kpi_cmd, "predictions", kpi_pred, "Predictions CSV from `classify` (source classifier)");
  flag(kpi_cmd, "model-id", kpi_model_id, "Name recorded in the origin (default: predictions file stem)");
  flag(kpi_cmd, "rule", kpi_rule, "R1 | R2 | R3 | R4 (source rule)")->check(CLI::IsMember({"R1", "R2", "R3", "R4"}))->capture_default_str();
  flag(kpi_cmd, "vocab", kpi_vocab, "Tag vocabulary CSV (source rule)");
  flag(kpi_cmd, "failure-alias", failure_alias, "P alias used by R1/R2")->capture_default_str();
  flag(kpi_cmd, "negation-cues", cues, "Comma-separated cue words (default: built-in EN+DE)");
  flag(kpi_cmd, "negation-window", neg_window, "Tokens before an occurrence searched for cues")->capture_default_str();
  flag(kpi_cmd, "effort-hours", effort_hours, "Analyst effort recorded in the report");
  flag(kpi_cmd, "journal", kpi_journal, "Tagging-session journal; effort is taken from it");
  flag(kpi_cmd, "days-per-year", kopt.days_per_year, "Rate scale")->capture_default_str();
  auto* collapse = kpi_cmd->add_flag("--collapse-same-day", kopt.collapse_same_day, "Count same-day failures once");
  if (auto v = common.config.get("kpi.collapse-same-day")) collapse->default_val(*v);
  flag(kpi_cmd, "out", kpi_out, "Report JSON (default: stdout)");
  kpi_cmd->callback([&] {
    require(kpi_corpus, "--corpus");
    require(kpi_fleet, "--fleet");
    if (effort_hours && !kpi_journal.empty()) throw UsageError("--effort-hours and --journal are exclusive");
    auto corpus = load_corpus(kpi_corpus, common, err);
    auto fleet = load_fleet(kpi_fleet);
    kpi::KpiReport report;
    if (kpi_source == "rule") {
      require(kpi_vocab, "--vocab");
      auto pp = common.preprocessor();
      auto docs = pp.run(corpus.orders).docs;
      RuleKpiRequest req;
      req.rule = *rules::parse_rule(kpi_rule);
      req.failure_alias = failure_alias;
      req.negation.window = neg_window;
      if (!cues.empty()) {
        auto list = split_csv_list(cues);
        req.negation.cues = {list.begin(), list.end()};
      }
      req.kpi = kopt;
      double effort = effort_hours.value_or(0.0);
      if (!kpi_journal.empty()) effort = journal_effort_hours(kpi_journal, docs);
      report = rule_kpi(corpus.orders, fleet, docs, pp.fingerprint(), load_vocab_csv(kpi_vocab), req, effort).report;
    } else {
      if (!kpi_journal.empty()) throw UsageError("--journal only applies to --source rule");
      kpi::EventSource source = kpi::ExpertLabels{};
      if (kpi_source == "classifier") {
        require(kpi_pred, "--predictions");
        kpi::ClassifierLabels labels{parse_predictions_csv(csv::read_file(kpi_pred)),
                                     kpi_model_id.empty() ? fs::path(kpi_pred).stem().string() : kpi_model_id};
        source = std::move(labels);
      }
      report = kpi::compute_kpi(corpus.orders, fleet, source, effort_hours.value_or(0.0), kopt);
    }
    if (kpi_out.empty()) {
      out << nlohmann::json(report).dump(2) << "\n";
    } else {
      write_text_file(kpi_out, nlohmann::json(report).dump(2) + "\n");
      out << kpi::render(report);
    }
  });

  // synth -------------------------------------------------------------------
  auto* syn = app.add_subcommand("synth", "Generate a synthetic corpus with planted failure rates");
  std::string syn_dir = "synthetic", syn_start = "2016-01-01";
  int syn_years = 4;
  auto scfg = synth::default_config();
  double corrective_rate = scfg.rate_per_year.at(kCorrective);
  flag(syn, "out-dir", syn_dir, "Output directory")->capture_default_str();
  flag(syn, "turbines", scfg.n_turbines, "Fleet size")->capture_default_str();
  flag(syn, "start", syn_start, "Window start YYYY-MM-DD")->capture_default_str();
  flag(syn, "years", syn_years, "Window length in years")->capture_default_str();
  flag(syn, "corrective-rate", corrective_rate, "Planted 02-08-01 events per turbine-year before negation")
      ->capture_default_str();
  flag(syn, "negation-rate", scfg.negation_rate, "Share of corrective orders rewritten as negated 02-08-97")
      ->capture_default_str();
  flag(syn, "noise-rate", scfg.noise_rate, "Per-word typo/abbreviation probability")->capture_default_str();
  flag(syn, "german-fraction", scfg.german_fraction, "Share of German descriptions")->capture_default_str();
  syn->callback([&] {
    auto start = parse_date(syn_start);
    if (!start) throw UsageError("--start must be YYYY-MM-DD");
    if (syn_years < 1) throw UsageError("--years must be >= 1");
    std::chrono::year_month_day ymd{*start};
    auto end_ymd = ymd + std::chrono::years{syn_years};
    if (!end_ymd.ok()) end_ymd = end_ymd.year() / end_ymd.month() / std::chrono::last;
    scfg.window_start = *start;
    scfg.window_end = std::chrono::sys_days{end_ymd};
    scfg.rate_per_year[kCorrective] = corrective_rate;
    scfg.seed = common.seed;
    auto corpus = synth::generate(scfg);
    fs::path dir = syn_dir;
    std::ostringstream c, f, v;
    write_corpus_csv(c, corpus.orders);
    write_fleet_csv(f, corpus.fleet);
    write_vocab_csv(v, synth::reference_vocabulary());
    write_text_file(dir / "corpus.csv", c.str());
    write_text_file(dir / "fleet.csv", f.str());
    write_text_file(dir / "truth.json", nlohmann::json(corpus.truth).dump(1) + "\n");
    write_text_file(dir / "reference_vocab.csv", v.str());
    out << corpus.orders.size() << " orders for " << corpus.fleet.size() << " turbines -> " << dir.string() << "\n";
  });

  // tag-serve ---------------------------------------------------------------
  auto* serve = app.add_subcommand("tag-serve", "Serve the tagging session HTTP API");
  std::string serve_corpus, serve_fleet, serve_journal, session_id = "default";
  std::string host = std::getenv("MWO_HOST") ? std::getenv("MWO_HOST") : "127.0.0.1";
  int port = std::getenv("MWO_PORT") ? std::atoi(std::getenv("MWO_PORT")) : 8080;
  std::string serve_alias = "failure";
  flag(serve, "corpus", serve_corpus, "Work-order CSV");
  flag(serve, "fleet", serve_fleet, "Fleet CSV");
  flag(serve, "journal", serve_journal, "Session journal (JSON lines); replayed on start");
  flag(serve, "session-id", session_id, "Session id in URLs")->capture_default_str();
  flag(serve, "host", host, "Listen address (env MWO_HOST)")->capture_default_str();
  flag(serve, "port", port, "Listen port, 0 = any (env MWO_PORT)")->capture_default_str();
  flag(serve, "failure-alias", serve_alias, "P alias used by R1/R2 previews")->capture_default_str();
  serve->callback([&] {
    require(serve_corpus, "--corpus");
    require(serve_fleet, "--fleet");
    auto corpus = load_corpus(serve_corpus, common, err);
    auto fleet = load_fleet(serve_fleet);
    auto pp = common.preprocessor();
    auto docs = pp.run(corpus.orders).docs;
    auto state = std::make_unique<SessionState>(session_id, std::move(corpus.orders), std::move(fleet), std::move(docs),
                                                pp.fingerprint());
    state->kpi_defaults.failure_alias = serve_alias;
    if (!serve_journal.empty()) state->session.attach_journal(serve_journal);
    state->session.open();
    auto* session = &state->session;
    ApiServer server;
    server.add_session(std::move(state));
    int bound = server.bind(host, port);
    out << "serving session `" << session_id << "` on http://" << host << ":" << bound << "\n" << std::flush;
    serve_until_signal(server);
    session->close();
  });

  // compare -----------------------------------------------------------------
  auto* cmp = app.add_subcommand("compare", "Compare KPI reports over the same window");
  std::vector<std::string> cmp_reports;
  std::string cmp_reference, cmp_out;
  flag(cmp, "reports", cmp_reports, "KpiReport JSON files")->expected(2, -1);
  flag(cmp, "reference", cmp_reference, "Reference method name (default: expert labels)");
  flag(cmp, "out", cmp_out, "Comparison JSON");
  cmp->callback([&] {
    if (cmp_reports.size() < 2) throw UsageError("--reports needs at least two files");
    std::vector<kpi::NamedReport> reports;
    for (const auto& p : cmp_reports) {
      auto r = nlohmann::json::parse(csv::read_file(p)).get<kpi::KpiReport>();
      std::string name = r.origin.label();
      for (const auto& existing : reports)
        if (existing.method == name) name += "@" + fs::path(p).stem().string();
      reports.push_back({name, std::move(r)});
    }
    auto table = kpi::compare(reports, cmp_reference.empty() ? std::nullopt : std::optional<std::string>(cmp_reference));
    out << kpi::render(table);
    if (!cmp_out.empty()) write_text_file(cmp_out, nlohmann::json(table).dump(2) + "\n");
  });

  // openapi -----------------------------------------------------------------
  auto* oapi = app.add_subcommand("openapi", "Write the HTTP API description");
  std::string oapi_out;
  flag(oapi, "out", oapi_out, "Output path (default: stdout)");
  oapi->callback([&] { emit_json(openapi_document(), oapi_out, out); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (!e.detail().is_null() && !e.detail().empty()) err << " " << e.detail().dump();
    err << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace mwo::service
