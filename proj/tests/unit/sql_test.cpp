#include <gtest/gtest.h>

#include <random>

#include "hmdap/error.hpp"
#include "hmdap/sql.hpp"
#include "random_query.hpp"

using namespace hmdap;
using namespace hmdap::sql;

namespace {

MemoryTables trips_and_zones() {
  MemoryTables t;
  t.add("trips", Relation(Schema{{"trip_id", ColumnType::Int64},
                                 {"city", ColumnType::Utf8},
                                 {"fare", ColumnType::Float64},
                                 {"zone", ColumnType::Int64}}));
  t.add("zones", Relation(Schema{{"zone", ColumnType::Int64}, {"name", ColumnType::Utf8}}));
  return t;
}

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return Error(ErrorCode::Internal, "none");
}

}  // namespace

TEST(Parser, SelectStar) {
  const auto s = parse_sql("SELECT * FROM trips");
  ASSERT_EQ(s.select.size(), 1u);
  EXPECT_EQ(s.select[0].expr, nullptr);
  EXPECT_EQ(s.from, "trips");
  EXPECT_TRUE(s.joins.empty());
}

TEST(Parser, CubeExtension) {
  const auto s = parse_sql("SELECT city, SUM(fare) FROM trips GROUP BY city WITH CUBE");
  EXPECT_EQ(s.group_mode, GroupMode::Cube);
  EXPECT_EQ(s.group_by, std::vector<std::string>{"city"});
  EXPECT_EQ(parse_sql("select city from trips group by city with rollup").group_mode, GroupMode::Rollup);
}

TEST(Parser, SyntaxErrorPosition) {
  const auto e = error_of([] { parse_sql("SELEC x"); });
  EXPECT_EQ(e.code(), ErrorCode::Syntax);
  ASSERT_TRUE(e.position());
  EXPECT_EQ(*e.position(), (SourcePosition{1, 1}));
  EXPECT_NE(std::string(e.what()).find("SELEC"), std::string::npos);

  const auto e2 = error_of([] { parse_sql("SELECT a\nFROM t\nWHERE a = = 1"); });
  ASSERT_TRUE(e2.position());
  EXPECT_EQ(*e2.position(), (SourcePosition{3, 11}));
}

TEST(Parser, FullGrammar) {
  const auto s = parse_sql(
      "SELECT trips.city AS c, COUNT(*), AVG(fare) FROM trips JOIN zones ON trips.zone = zones.zone "
      "WHERE fare > 2.5 AND NOT city = 'it''s' GROUP BY trips.city ORDER BY c DESC, city LIMIT 10;");
  EXPECT_EQ(s.joins.size(), 1u);
  EXPECT_EQ(s.joins[0].on[0], (std::pair<std::string, std::string>{"trips.zone", "zones.zone"}));
  EXPECT_EQ(s.order_by.size(), 2u);
  EXPECT_TRUE(s.order_by[0].descending);
  EXPECT_EQ(s.limit, 10);
  EXPECT_TRUE(ast_equal(s, parse_sql(print_sql(s))));
}

TEST(Parser, IdentifiersAreCaseSensitive) {
  const auto s = parse_sql("select City from Trips");
  EXPECT_EQ(s.from, "Trips");
  auto t = trips_and_zones();
  EXPECT_EQ(error_of([&] { plan_sql("SELECT City FROM trips", t); }).code(), ErrorCode::Plan);
}

TEST(Planner, StarExpandsInSchemaOrder) {
  auto t = trips_and_zones();
  const auto plan = plan_sql("SELECT * FROM trips", t);
  ASSERT_TRUE(plan->as<ProjectOp>());
  EXPECT_TRUE(plan->inputs[0]->as<ScanOp>());
  EXPECT_EQ(plan->schema.size(), 4u);
  EXPECT_EQ(plan->schema[0].name, "trip_id");
}

TEST(Planner, Errors) {
  auto t = trips_and_zones();
  EXPECT_EQ(error_of([&] { plan_sql("SELECT nope FROM trips", t); }).code(), ErrorCode::Plan);
  EXPECT_EQ(error_of([&] { plan_sql("SELECT city, fare FROM trips GROUP BY city", t); }).code(), ErrorCode::Plan);
  EXPECT_EQ(error_of([&] { plan_sql("SELECT * FROM nowhere", t); }).code(), ErrorCode::Plan);
  EXPECT_EQ(error_of([&] { plan_sql("SELECT zone FROM trips JOIN zones ON trips.zone = zones.zone", t); }).code(),
            ErrorCode::Plan);
  EXPECT_EQ(error_of([&] { plan_sql("SELECT city FROM trips WHERE city + 1 > 2", t); }).code(), ErrorCode::Type);
}

TEST(Planner, JoinSchemaIsLeftThenRight) {
  auto t = trips_and_zones();
  const auto plan = plan_sql("SELECT * FROM trips JOIN zones ON trips.zone = zones.zone", t);
  const LogicalNode* join = plan->inputs[0].get();
  ASSERT_TRUE(join->as<JoinOp>());
  EXPECT_EQ(join->schema.size(), 6u);
  EXPECT_EQ(join->schema[0].name, "trips.trip_id");
  EXPECT_EQ(join->schema[4].name, "zones.zone");
}

TEST(Planner, RollupAppendsGroupingId) {
  auto t = trips_and_zones();
  const auto plan = plan_sql("SELECT city, SUM(fare) FROM trips GROUP BY city WITH ROLLUP", t);
  EXPECT_EQ(plan->schema[plan->schema.size() - 1].name, "grouping_id");
}

// Property: print/parse round trip reproduces an equal AST and plan.
TEST(ParserProperty, PrintParseRoundTrip) {
  std::mt19937_64 rng(99);
  auto db = hmdap::testing::random_database(rng, 4, 5);
  for (int i = 0; i < 300; ++i) {
    const auto text = hmdap::testing::random_query(rng, db);
    const auto ast = parse_sql(text);
    const auto printed = print_sql(ast);
    const auto reparsed = parse_sql(printed);
    ASSERT_TRUE(ast_equal(ast, reparsed)) << text << "\n" << printed;
    EXPECT_TRUE(plan_equal(*plan_query(ast, db.tables), *plan_query(reparsed, db.tables))) << text;
  }
}

// Property: parsing is total. Arbitrary bytes yield an AST or a positioned
// syntax error, never a crash or another exception type.
TEST(ParserProperty, FuzzArbitraryInput) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> tokens = {"SELECT", "FROM", "WHERE", "GROUP", "BY", "WITH", "CUBE", "(", ")", ",",
                                           "*", "'x", "'", "1e999", "99999999999999999999", "a.b", "JOIN", "ON",
                                           "=", "<>", "-", "NOT", "LIMIT", "\n", "\xff", "ORDER", "COUNT("};
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    const int n = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int k = 0; k < n; ++k) {
      if (rng() % 4 == 0) {
        text += static_cast<char>(rng() % 256);
      } else {
        text += tokens[rng() % tokens.size()] + " ";
      }
    }
    try {
      parse_sql(text);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::Syntax) << text;
      ASSERT_TRUE(e.position()) << text;
      EXPECT_GE(e.position()->line, 1);
      EXPECT_GE(e.position()->column, 1);
    }
  }
}

TEST(Parser, DeepNestingIsAnErrorNotACrash) {
  std::string text = "SELECT " + std::string(5000, '(') + "1" + std::string(5000, ')') + " FROM t";
  EXPECT_EQ(error_of([&] { parse_sql(text); }).code(), ErrorCode::Syntax);
}
