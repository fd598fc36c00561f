#include <gtest/gtest.h>

#include <set>

#include "mwo/config.hpp"
#include "mwo/csv.hpp"
#include "mwo/date.hpp"
#include "mwo/rng.hpp"
#include "mwo/text.hpp"
#include "mwo/zeus.hpp"

using namespace mwo;

TEST(Utf8, RoundTripsMixedScripts) {
  const std::string s = "Störung am Getriebe, Lüfter ÄÖÜ ß";
  EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
  EXPECT_EQ(text::length("Lüfter"), 6u);
}

TEST(Utf8, InvalidBytesBecomeReplacementCharacter) {
  auto cps = text::decode_utf8(std::string("a\xff" "b"));
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], text::kReplacement);
}

TEST(Lowercase, HandlesUmlauts) {
  EXPECT_EQ(text::lowercase("STÖRUNG Äußerst"), "störung äußerst");
  EXPECT_EQ(text::lowercase("Gearbox"), "gearbox");
}

TEST(Levenshtein, KnownDistances) {
  auto d = [](const char* a, const char* b) { return text::levenshtein(text::decode_utf8(a), text::decode_utf8(b)); };
  EXPECT_EQ(d("kitten", "sitting"), 3u);
  EXPECT_EQ(d("", "abc"), 3u);
  EXPECT_EQ(d("failure", "failures"), 1u);
  EXPECT_EQ(d("störung", "storung"), 1u);  // one code point, not two bytes
}

TEST(Levenshtein, SimilarityIsOneMinusNormalizedDistance) {
  EXPECT_DOUBLE_EQ(text::similarity("failure", "failures"), 7.0 / 8.0);
  EXPECT_DOUBLE_EQ(text::similarity("abc", "abc"), 1.0);
  EXPECT_DOUBLE_EQ(text::similarity("abc", "xyz"), 0.0);
}

TEST(Csv, QuotedFieldsAndCrlf) {
  auto rows = csv::parse("\xEF\xBB\xBFid,text\r\n1,\"a, \"\"b\"\"\nc\"\r\n\r\n2,x\n");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0][0], "id");
  EXPECT_EQ(rows[1][1], "a, \"b\"\nc");
  EXPECT_EQ(rows[2][1], "x");
}

TEST(Csv, UnterminatedQuoteThrows) { EXPECT_THROW(csv::parse("a,\"b\n"), Error); }

TEST(Csv, QuoteRoundTrip) {
  std::ostringstream out;
  csv::write_row(out, {"plain", "with,comma", "with \"quote\""});
  auto rows = csv::parse(out.str());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0][1], "with,comma");
  EXPECT_EQ(rows[0][2], "with \"quote\"");
}

TEST(Config, ParsesKeyValuesAndComments) {
  auto c = KeyValueConfig::parse("# comment\nseed = 7\n train.model=nb  \n\nflag = yes\n");
  EXPECT_EQ(c.get_int("seed", 0), 7);
  EXPECT_EQ(c.get("train.model").value(), "nb");
  EXPECT_TRUE(c.get_bool("flag", false));
  EXPECT_DOUBLE_EQ(c.get_double("missing", 2.5), 2.5);
}

TEST(Date, StrictParsing) {
  EXPECT_TRUE(parse_date("2023-09-01"));
  EXPECT_FALSE(parse_date("2023-13-40"));
  EXPECT_FALSE(parse_date("2023-02-29"));
  EXPECT_TRUE(parse_date("2024-02-29"));
  EXPECT_FALSE(parse_date("2023-9-1"));
  EXPECT_EQ(days_between(*parse_date("2023-09-01"), *parse_date("2023-09-25")), 24);
  EXPECT_EQ(format_date(make_date(2023, 6, 3)), "2023-06-03");
}

TEST(Zeus, TenCodesAndLevel3Truncation) {
  EXPECT_EQ(ZeusCode::all().size(), 10u);
  auto c = ZeusCode::parse("02-08-01-02");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->level(), 4);
  EXPECT_EQ(c->level3(), kCorrective);
  EXPECT_FALSE(ZeusCode::parse("02-08-03"));
  EXPECT_EQ(ZeusCode::parse("02-08-XX")->level3().code(), "02-08-XX");
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  Rng c(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) {
    auto v = c.below(7);
    EXPECT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
}

TEST(Rng, ExponentialMeanMatches) {
  Rng r(9);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) sum += r.exponential(45.0);
  EXPECT_NEAR(sum / n, 45.0, 0.5);
}
