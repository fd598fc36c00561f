#include <gtest/gtest.h>

#include <map>

#include "mwo/corpus.hpp"
#include "mwo/service/pipeline.hpp"

using namespace mwo;

namespace {

const std::string kData = MWO_TEST_DATA;

Preprocessor shipped() { return service::make_preprocessor(); }

}  // namespace

TEST(Ingest, Table2Fixture) {
  auto c = ingest_csv(kData + "/table2.csv");
  ASSERT_EQ(c.orders.size(), 8u);
  EXPECT_TRUE(c.report.rejected.empty());
  std::map<std::string, int> by_code;
  for (const auto& o : c.orders) ++by_code[std::string(o.zeus_code->code())];
  EXPECT_EQ(by_code["02-08-01"], 5);
  EXPECT_EQ(by_code["02-08-02"], 2);
  EXPECT_EQ(by_code["02-08-97"], 1);
}

TEST(Ingest, HeaderOnlyGivesEmptyCorpus) {
  auto c = ingest_csv_text("work_order_id,turbine_id,start_date,description,zeus_code\n");
  EXPECT_TRUE(c.orders.empty());
  EXPECT_TRUE(c.report.rejected.empty());
}

TEST(Ingest, InvalidDateIsRejectedAndReported) {
  auto c = ingest_csv_text(
      "work_order_id,turbine_id,start_date,description,zeus_code\n"
      "A,WT1,2023-13-40,text,02-08-01\n"
      "B,WT1,2023-01-02,text,02-08-01\n");
  ASSERT_EQ(c.orders.size(), 1u);
  ASSERT_EQ(c.report.rejected.size(), 1u);
  EXPECT_EQ(c.report.rejected[0].work_order_id, "A");
  EXPECT_EQ(c.report.rejected[0].reason, "invalid_date");
  EXPECT_EQ(c.report.rejected[0].value, "2023-13-40");
}

TEST(Ingest, UnknownZeusCodeRejectedEmptyCodeAllowed) {
  auto c = ingest_csv_text(
      "work_order_id,turbine_id,start_date,description,zeus_code\n"
      "A,WT1,2023-01-01,text,02-08-55\n"
      "B,WT1,2023-01-02,text,\n");
  ASSERT_EQ(c.orders.size(), 1u);
  EXPECT_FALSE(c.orders[0].zeus_code);
  EXPECT_EQ(c.report.rejected[0].reason, "invalid_zeus_code");
}

TEST(Ingest, MissingColumnsAndDuplicateIdsAreErrors) {
  try {
    ingest_csv_text("work_order_id,description\nA,x\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_TRUE(e.detail().contains("missing_columns"));
  }
  try {
    ingest_csv_text(
        "work_order_id,turbine_id,start_date,description\n"
        "A,WT1,2023-01-01,x\nA,WT1,2023-01-02,y\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.detail().contains("duplicate_ids"));
  }
}

TEST(Ingest, ColumnMappingFromConfig) {
  auto cfg = KeyValueConfig::parse("column.work_order_id = Auftrag\ncolumn.description = Text\n");
  auto c = ingest_csv_text("Auftrag,turbine_id,start_date,Text\nA,WT1,2023-01-01,x\n", ColumnMapping::from_config(cfg));
  ASSERT_EQ(c.orders.size(), 1u);
  EXPECT_EQ(c.orders[0].id, "A");
}

TEST(Ingest, MissingFileIsNotFound) {
  try {
    ingest_csv("/nonexistent/corpus.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::not_found);
  }
}

TEST(Ingest, CanonicalCsvRoundTrip) {
  auto c = ingest_csv(kData + "/table2.csv");
  std::ostringstream out;
  write_corpus_csv(out, c.orders);
  auto again = ingest_csv_text(out.str());
  ASSERT_EQ(again.orders.size(), c.orders.size());
  for (std::size_t i = 0; i < c.orders.size(); ++i) {
    EXPECT_EQ(again.orders[i].id, c.orders[i].id);
    EXPECT_EQ(again.orders[i].description, c.orders[i].description);
    EXPECT_EQ(again.orders[i].start_date, c.orders[i].start_date);
  }
}

TEST(Fleet, ValidatesWindowOrder) {
  auto f = load_fleet(kData + "/table2_fleet.csv");
  EXPECT_EQ(f.size(), 2u);
  EXPECT_EQ(format_date(f.at("WT1").operation_start()), "2023-06-03");
  EXPECT_THROW(parse_fleet_csv("turbine_id,commissioning_date,observation_start,observation_end\n"
                               "WT1,2023-01-01,2023-06-01,2023-05-01\n"),
               Error);
}

TEST(Preprocess, TroubleshootingSentence) {
  auto pp = shipped();
  EXPECT_EQ(pp.tokenize("Troubleshooting at crane on outside platform performed."),
            (std::vector<std::string>{"troubleshooting", "crane", "outside", "platform", "performed"}));
}

TEST(Preprocess, DigitsRemoved) {
  auto pp = shipped();
  EXPECT_EQ(pp.tokenize("Pitch batteries exchanged at axle 2."),
            (std::vector<std::string>{"pitch", "batteries", "exchanged", "axle"}));
}

TEST(Preprocess, StepOrderOnMessyText) {
  // Upper case, tabs, punctuation glued to words, digits inside words.
  EXPECT_EQ(Preprocessor::clean("  Gear\tBOX-12 failed!!  "), "gear box failed");
  EXPECT_EQ(Preprocessor::clean("M8-Schraube   getauscht."), "mschraube getauscht");
}

TEST(Preprocess, NegationCuesSurviveStopwordRemoval) {
  auto pp = shipped();
  EXPECT_EQ(pp.tokenize("No failure detected"), (std::vector<std::string>{"no", "failure", "detected"}));
  EXPECT_EQ(pp.tokenize("Kein Defekt, nicht getauscht"),
            (std::vector<std::string>{"kein", "defekt", "nicht", "getauscht"}));
}

TEST(Preprocess, JunkWordsRemoved) {
  auto pp = shipped();
  EXPECT_EQ(pp.tokenize("WEA 7 Getriebe siehe Bericht"), (std::vector<std::string>{"getriebe", "bericht"}));
}

TEST(Preprocess, EmptyDocumentsAreDropped) {
  std::vector<WorkOrder> orders{{"A", "WT1", make_date(2023, 1, 1), "   ", std::nullopt},
                                {"B", "WT1", make_date(2023, 1, 2), "at the 42", std::nullopt},
                                {"C", "WT1", make_date(2023, 1, 3), "gearbox", std::nullopt}};
  auto r = shipped().run(orders);
  ASSERT_EQ(r.docs.size(), 1u);
  EXPECT_EQ(r.docs[0].work_order_id, "C");
  EXPECT_EQ(r.dropped.dropped_ids, (std::vector<std::string>{"A", "B"}));
}

TEST(Preprocess, FingerprintTracksWordLists) {
  Preprocessor a({"x"}, {}), b({"y"}, {});
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint(), Preprocessor({"x"}, {}).fingerprint());
}

TEST(WordList, CommentsAndBlankLinesIgnored) {
  auto w = parse_word_list("# header\nthe\n\n  and  \n# the end\n");
  EXPECT_EQ(w, (WordSet{"and", "the"}));
}
