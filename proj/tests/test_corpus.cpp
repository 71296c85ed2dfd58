#include <algorithm>
#include <random>

#include "aspectcast/corpus.hpp"
#include "test_util.hpp"

using namespace aspectcast;
using testutil::throws_with;

TEST(Quarter, ParseAndFormat) {
  const auto q = Quarter::parse("2016Q4");
  EXPECT_EQ(q.year(), 2016);
  EXPECT_EQ(q.index(), 4);
  EXPECT_EQ(q.str(), "2016Q4");
  EXPECT_EQ(Quarter::parse("2016q1"), Quarter(2016, 1));
}

TEST(Quarter, InvalidIndex) {
  EXPECT_TRUE(throws_with([] { Quarter::parse("2016Q5"); }, "invalid quarter index"));
  EXPECT_TRUE(throws_with([] { Quarter::parse("2016Q0"); }, "invalid quarter index"));
  EXPECT_TRUE(throws_with([] { Quarter(2016, 7); }, "invalid quarter index"));
  EXPECT_THROW(Quarter::parse("2016-Q1"), Error);
  EXPECT_THROW(Quarter::parse("Q1"), Error);
}

TEST(Quarter, NextPrevRoundTrip) {
  for (int y = 1999; y <= 2021; ++y) {
    for (int i = 1; i <= 4; ++i) {
      const Quarter q(y, i);
      EXPECT_EQ(q.next().prev(), q);
      EXPECT_EQ(q.prev().next(), q);
      EXPECT_LT(q, q.next());
    }
  }
  EXPECT_EQ(Quarter(2016, 4).next(), Quarter(2017, 1));
}

TEST(Quarter, OrderingIsTotalAndSortIdempotent) {
  std::vector<Quarter> qs;
  for (int y = 2014; y <= 2018; ++y)
    for (int i = 1; i <= 4; ++i) qs.emplace_back(y, i);
  auto shuffled = qs;
  std::mt19937 g(3);
  std::shuffle(shuffled.begin(), shuffled.end(), g);
  std::sort(shuffled.begin(), shuffled.end());
  EXPECT_EQ(shuffled, qs);
  auto again = shuffled;
  std::sort(again.begin(), again.end());
  EXPECT_EQ(again, shuffled);
  for (const auto& a : qs)
    for (const auto& b : qs) EXPECT_EQ((a < b) + (b < a) + (a == b), 1);
}

TEST(Reviews, JsonlLine) {
  const auto r = parse_reviews(R"({"id":"r1","quarter":"2016Q4","text":"great support"})", ReviewFormat::jsonl);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, "r1");
  EXPECT_EQ(r[0].quarter, Quarter(2016, 4));
  EXPECT_EQ(r[0].text, "great support");
  EXPECT_FALSE(r[0].source.has_value());
}

TEST(Reviews, CsvHeaderOnlyIsEmpty) {
  EXPECT_TRUE(parse_reviews("id,quarter,text\n", ReviewFormat::csv).empty());
}

TEST(Reviews, CsvWithQuotesAndSource) {
  const auto r = parse_reviews("id,quarter,text,source\nr1,2017Q1,\"fast, cheap\",g2\nr2,2017Q2,\"said \"\"ok\"\"\",\n",
                               ReviewFormat::csv);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].text, "fast, cheap");
  EXPECT_EQ(r[0].source, "g2");
  EXPECT_EQ(r[1].text, "said \"ok\"");
}

TEST(Reviews, Errors) {
  EXPECT_TRUE(throws_with(
      [] { parse_reviews(R"({"id":"r1","quarter":"2016Q5","text":"x"})", ReviewFormat::jsonl); },
      "invalid quarter index"));
  EXPECT_TRUE(throws_with(
      [] { parse_reviews("{\"id\":\"a\",\"quarter\":\"2016Q1\",\"text\":\"x\"}\n{bad json", ReviewFormat::jsonl); },
      "line 2"));
  EXPECT_TRUE(throws_with(
      [] { parse_reviews(R"({"id":"blank","quarter":"2016Q1","text":"   "})", ReviewFormat::jsonl); }, "blank"));
  EXPECT_TRUE(throws_with(
      [] {
        parse_reviews("{\"id\":\"a\",\"quarter\":\"2016Q1\",\"text\":\"x\"}\n{\"id\":\"a\",\"quarter\":\"2016Q1\",\"text\":\"y\"}",
                      ReviewFormat::jsonl);
      },
      "duplicate"));
  EXPECT_TRUE(throws_with([] { parse_reviews("id,text\nr1,hello\n", ReviewFormat::csv); }, "quarter"));
}

TEST(Reviews, SerializeRoundTrip) {
  std::vector<Review> in;
  std::mt19937 g(11);
  const std::vector<std::string> alphabet = {"a", "b", "c", " ", ",", "\"", "\n", "\xc3\xa9", "x", "!", "?"};
  for (int i = 0; i < 50; ++i) {
    std::string text = "t";
    for (int k = 0; k < 12; ++k) text += alphabet[g() % alphabet.size()];
    Review r{"id" + std::to_string(i), Quarter(2015 + static_cast<int>(g() % 4), 1 + static_cast<int>(g() % 4)), text,
             std::nullopt};
    if (i % 3 == 0) r.source = "src" + std::to_string(i);
    in.push_back(r);
  }
  EXPECT_EQ(parse_reviews(serialize_reviews(in, ReviewFormat::jsonl), ReviewFormat::jsonl), in);
  // CSV has no way to tell an absent source from an empty one, so keep sources on every row.
  for (auto& r : in) r.source = r.source.value_or("none");
  EXPECT_EQ(parse_reviews(serialize_reviews(in, ReviewFormat::csv), ReviewFormat::csv), in);
}

TEST(Reviews, FormatFromPath) {
  EXPECT_EQ(review_format_from_path("a/b.jsonl"), ReviewFormat::jsonl);
  EXPECT_EQ(review_format_from_path("b.csv"), ReviewFormat::csv);
}

TEST(GroupByQuarter, Partition) {
  EXPECT_TRUE(group_by_quarter({}).empty());
  std::vector<Review> rs = {{"a", Quarter(2016, 4), "x", {}},
                            {"b", Quarter(2017, 1), "y", {}},
                            {"c", Quarter(2016, 4), "z", {}},
                            {"d", Quarter(2016, 4), "w", {}}};
  const auto g = group_by_quarter(rs);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g.at(Quarter(2016, 4)).size(), 3u);
  EXPECT_EQ(g.at(Quarter(2017, 1)).size(), 1u);
  EXPECT_EQ(g.at(Quarter(2016, 4))[1].id, "c");  // input order kept
}

TEST(GroupByQuarter, TwelveReviewsOneQuarter) {
  std::vector<Review> rs;
  for (int i = 0; i < 12; ++i) rs.push_back({"as" + std::to_string(i), Quarter(2016, 4), "support", {}});
  const auto g = group_by_quarter(rs);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g.begin()->second.size(), 12u);
}

TEST(GroupByQuarter, NeverDropsOrDuplicates) {
  std::mt19937 g(5);
  std::vector<Review> rs;
  for (int i = 0; i < 200; ++i) {
    rs.push_back({"r" + std::to_string(i), Quarter(2015 + static_cast<int>(g() % 4), 1 + static_cast<int>(g() % 4)), "t", {}});
  }
  std::vector<std::string> seen;
  for (const auto& [q, group] : group_by_quarter(rs)) {
    for (const auto& r : group) {
      EXPECT_EQ(r.quarter, q);
      seen.push_back(r.id);
    }
  }
  std::vector<std::string> ids;
  for (const auto& r : rs) ids.push_back(r.id);
  std::sort(seen.begin(), seen.end());
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(seen, ids);
}

TEST(Revenue, ParsesAndSorts) {
  const auto s = parse_revenue("quarter,revenue\n2016Q1,110\n2015Q4,100\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.points()[0].first, Quarter(2015, 4));
  EXPECT_DOUBLE_EQ(s.points()[1].second, 110.0);
}

TEST(Revenue, Errors) {
  EXPECT_TRUE(throws_with([] { parse_revenue("quarter,revenue\n2015Q4,100\n2016Q2,120\n"); }, "missing 2016Q1"));
  EXPECT_TRUE(throws_with([] { parse_revenue("quarter,revenue\n2016Q1,-5\n"); }, "non-positive revenue"));
  EXPECT_TRUE(throws_with([] { parse_revenue("quarter,revenue\n2016Q1,0\n"); }, "non-positive revenue"));
  EXPECT_TRUE(throws_with([] { parse_revenue("quarter,revenue\n2016Q1,abc\n"); }, "line 2"));
  EXPECT_TRUE(throws_with([] { parse_revenue("quarter,revenue\n2016Q1,1\n2016Q1,2\n"); }, "duplicate quarter"));
  EXPECT_TRUE(throws_with([] { parse_revenue("q,r\n"); }, "header"));
}
