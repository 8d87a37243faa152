#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "hmdap/error.hpp"
#include "hmdap/executor.hpp"
#include "hmdap/optimizer.hpp"
#include "hmdap/sql.hpp"
#include "oracles.hpp"
#include "random_query.hpp"

using namespace hmdap;
using namespace hmdap::opt;

namespace {

Relation int_column(const std::vector<std::int64_t>& values) {
  std::vector<Row> rows;
  for (auto v : values) rows.push_back({Value(v)});
  return Relation(Schema{{"v", ColumnType::Int64}}, std::move(rows));
}

TableStats table(std::int64_t rows, std::map<std::string, double> ndv) {
  TableStats t;
  t.row_count = rows;
  for (auto& [c, n] : ndv) t.columns[c].ndv_estimate = n;
  return t;
}

}  // namespace

TEST(Sampling, WholeRelationWhenSmall) {
  const auto r = int_column({1, 2, 3, 4, 5});
  EXPECT_TRUE(multiset_equal(sample_relation(r, 10, 1), r));
}

TEST(Sampling, DeterministicForSeed) {
  std::vector<std::int64_t> v(1000);
  std::iota(v.begin(), v.end(), 0);
  const auto r = int_column(v);
  const auto a = sample_relation(r, 100, 42);
  EXPECT_EQ(a.row_count(), 100u);
  EXPECT_EQ(a.rows(), sample_relation(r, 100, 42).rows());
  EXPECT_NE(a.rows(), sample_relation(r, 100, 43).rows());
}

// Each row's inclusion frequency over 2000 seeds against binomial bounds.
// With 1000 rows a handful of 3-sigma excursions is expected by chance, so
// at most 1% may fall outside 3 sigma and none outside 5 sigma.
TEST(Sampling, InclusionFrequencyIsUniform) {
  std::vector<std::int64_t> v(1000);
  std::iota(v.begin(), v.end(), 0);
  const auto r = int_column(v);
  const int seeds = 2000;
  std::vector<int> hits(1000);
  for (int s = 0; s < seeds; ++s) {
    for (const auto& row : sample_relation(r, 100, static_cast<std::uint64_t>(s)).rows()) hits[row[0].as_int()]++;
  }
  const double p = 0.1, mean = seeds * p, sigma = std::sqrt(seeds * p * (1 - p));
  int outside3 = 0;
  for (int h : hits) {
    EXPECT_LE(std::abs(h - mean), 5 * sigma);
    if (std::abs(h - mean) > 3 * sigma) ++outside3;
  }
  EXPECT_LE(outside3, 10);
}

TEST(Stats, ExactPath) {
  const auto s = collect_stats(int_column({1, 1, 2, 3}));
  EXPECT_EQ(s.row_count, 4);
  const auto& c = s.columns.at("v");
  EXPECT_EQ(c.ndv_estimate, 3.0);
  EXPECT_EQ(c.min, Value(1));
  EXPECT_EQ(c.max, Value(3));
  EXPECT_EQ(c.null_count, 0);
}

TEST(Stats, Chao84Arithmetic) {
  EXPECT_DOUBLE_EQ(chao84(3, 2, 1), 5.0);
  EXPECT_DOUBLE_EQ(chao84(3, 2, 0), 4.0);
  EXPECT_DOUBLE_EQ(chao84(4, 0, 0), 4.0);
}

TEST(Stats, SampledNdvNearTruth) {
  std::mt19937_64 rng(1);
  std::vector<std::int64_t> v(10000);
  for (auto& x : v) x = static_cast<std::int64_t>(rng() % 50);
  const auto s = collect_stats(int_column(v), 500, 3);
  EXPECT_NEAR(s.columns.at("v").ndv_estimate, 50.0, 25.0);
  EXPECT_EQ(s.row_count, 10000);
}

// Property: below the threshold stats equal a brute-force computation, and
// partial accumulators merge in any grouping.
TEST(StatsProperty, ExactPathMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Row> rows;
    const int n = std::uniform_int_distribution<int>(0, 60)(rng);
    for (int i = 0; i < n; ++i) {
      rows.push_back({rng() % 4 ? Value(static_cast<std::int64_t>(rng() % 9)) : Value::null(),
                      rng() % 5 ? Value(std::string(1, static_cast<char>('a' + rng() % 6))) : Value::null()});
    }
    const Relation r(Schema{{"a", ColumnType::Int64}, {"b", ColumnType::Utf8}}, rows);
    const auto s = collect_stats(r);
    for (std::size_t c = 0; c < 2; ++c) {
      std::set<std::string> distinct;
      std::int64_t nulls = 0;
      std::optional<Value> lo, hi;
      for (const auto& row : rows) {
        if (row[c].is_null()) {
          ++nulls;
          continue;
        }
        distinct.insert(row[c].to_string());
        if (!lo || total_order(row[c], *lo) < 0) lo = row[c];
        if (!hi || total_order(row[c], *hi) > 0) hi = row[c];
      }
      const auto& cs = s.columns.at(r.schema()[c].name);
      EXPECT_EQ(cs.ndv_estimate, static_cast<double>(distinct.size()));
      EXPECT_EQ(cs.null_count, nulls);
      EXPECT_EQ(cs.min, lo.value_or(Value::null()));
      EXPECT_EQ(cs.max, hi.value_or(Value::null()));
      EXPECT_LE(cs.null_count, s.row_count);
    }
    StatsAccumulator a(r.schema(), true), b(r.schema(), true), c(r.schema(), true);
    for (std::size_t i = 0; i < rows.size(); ++i) (i % 2 ? a : b).add(rows[i]);
    StatsAccumulator ab = a;
    ab.merge(b);
    b.merge(a);
    EXPECT_EQ(ab.finish(), b.finish());
    EXPECT_EQ(ab.finish(), s);
  }
}

TEST(Stats, JsonRoundTrip) {
  StatsMap m;
  m["t"] = collect_stats(Relation(Schema{{"a", ColumnType::Float64}, {"b", ColumnType::Utf8}},
                                  std::vector<Row>{{Value(1.5), Value("x")}, {Value::null(), Value("y")}}));
  EXPECT_EQ(stats_from_json(stats_to_json(m)), m);
  hmdap::testing::TempDir dir;
  save_stats(dir.path() / "stats.json", m);
  EXPECT_EQ(load_stats(dir.path() / "stats.json"), m);
  EXPECT_TRUE(load_stats(dir.path() / "missing.json").empty());
}

TEST(CostModel, EqualitySelectivity) {
  StatsMap stats{{"trips", table(100, {{"city", 10}})}};
  const auto scan = make_scan("trips", Schema{{"city", ColumnType::Utf8}});
  const auto f = make_filter(scan, compare(CompareOp::Eq, col("trips.city"), lit(Value("X"))));
  EXPECT_DOUBLE_EQ(estimate_cardinality(*f, stats), 10.0);
  const auto t = make_filter(scan, lit(Value(true)));
  EXPECT_DOUBLE_EQ(estimate_selectivity(*lit(Value(true)), *scan, stats), 1.0);
  EXPECT_DOUBLE_EQ(estimate_cardinality(*t, stats), 100.0);
}

TEST(CostModel, JoinEstimate) {
  StatsMap stats{{"l", table(100, {{"a", 50}})}, {"r", table(200, {{"b", 50}})}};
  const auto j = make_join(make_scan("l", Schema{{"a", ColumnType::Int64}}), make_scan("r", Schema{{"b", ColumnType::Int64}}),
                           {{"l.a", "r.b"}});
  EXPECT_DOUBLE_EQ(estimate_cardinality(*j, stats), 400.0);
  EXPECT_DOUBLE_EQ(plan_cost(*j, stats), 700.0);
}

TEST(CostModel, RangeAndLimitAndAggregate) {
  TableStats t = table(100, {{"x", 100}, {"g", 4}});
  t.columns["x"].min = Value(0.0);
  t.columns["x"].max = Value(10.0);
  StatsMap stats{{"t", t}};
  const auto scan = make_scan("t", Schema{{"x", ColumnType::Float64}, {"g", ColumnType::Int64}});
  EXPECT_DOUBLE_EQ(estimate_cardinality(*make_filter(scan, compare(CompareOp::Lt, col("t.x"), lit(Value(2.5)))), stats),
                   25.0);
  EXPECT_DOUBLE_EQ(estimate_cardinality(*make_filter(scan, compare(CompareOp::Gt, lit(Value(2.5)), col("t.x"))), stats),
                   25.0);
  EXPECT_DOUBLE_EQ(estimate_cardinality(*make_limit(scan, 7), stats), 7.0);
  const auto agg = make_aggregate(scan, {"t.g"}, GroupMode::Rollup, {aggregate(AggFunc::Count, nullptr)}, {"agg0"});
  EXPECT_DOUBLE_EQ(estimate_cardinality(*agg, stats), 5.0);
}

TEST(CostModel, MissingStatsIsPlanError) {
  const auto scan = make_scan("t", Schema{{"x", ColumnType::Int64}});
  try {
    estimate_cardinality(*scan, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Plan);
  }
}

// Property: every selectivity lies in [0, 1] and every estimate is finite
// and non-negative, over random plans from the query generator.
TEST(CostModelProperty, EstimatesBoundedAndFinite) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 150; ++trial) {
    auto db = hmdap::testing::random_database(rng, 4, 30);
    const auto plan = sql::plan_sql(hmdap::testing::random_query(rng, db), db.tables);
    std::function<void(const LogicalNode&)> walk = [&](const LogicalNode& n) {
      const double c = estimate_cardinality(n, db.stats);
      EXPECT_TRUE(std::isfinite(c));
      EXPECT_GE(c, 0.0);
      if (const auto* f = n.as<FilterOp>()) {
        const double s = estimate_selectivity(*f->predicate, *n.inputs[0], db.stats);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
      }
      for (const auto& in : n.inputs) walk(*in);
    };
    walk(*plan);
    const double cost = plan_cost(*optimize(plan, db.stats), db.stats);
    EXPECT_TRUE(std::isfinite(cost));
    EXPECT_GE(cost, 0.0);
  }
}

TEST(JoinOrder, SingleRelationIsItsScan) {
  const auto scan = make_scan("t", Schema{{"a", ColumnType::Int64}});
  EXPECT_EQ(choose_join_order({scan}, {}, StatsMap{{"t", table(5, {})}}), scan);
}

TEST(JoinOrder, DisconnectedGraphIsPlanError) {
  StatsMap stats{{"a", table(5, {})}, {"b", table(5, {})}};
  try {
    choose_join_order({make_scan("a", Schema{{"x", ColumnType::Int64}}), make_scan("b", Schema{{"y", ColumnType::Int64}})},
                      {}, stats);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Plan);
  }
}

// Chain R-S-T with a tiny S: every order's cost is compared by hand, and the
// cheapest joins S first.
TEST(JoinOrder, TinyMiddleRelationJoinsFirst) {
  StatsMap stats{{"R", table(1000, {{"s", 1000}})}, {"S", table(2, {{"r", 2}, {"t", 2}})}, {"T", table(1000, {{"s", 1000}})}};
  const auto R = make_scan("R", Schema{{"s", ColumnType::Int64}});
  const auto S = make_scan("S", Schema{{"r", ColumnType::Int64}, {"t", ColumnType::Int64}});
  const auto T = make_scan("T", Schema{{"s", ColumnType::Int64}});
  const std::vector<JoinKey> edges = {{"R.s", "S.r"}, {"S.t", "T.s"}};
  const auto best = choose_join_order({R, S, T}, edges, stats);
  // (R S) T and R (S T) both cost 1000+2+1000 + 2 + 2 = 2006; (R T) needs a
  // cross product and is not considered.
  const auto rs_t = make_join(make_join(R, S, {{"R.s", "S.r"}}), T, {{"S.t", "T.s"}});
  EXPECT_DOUBLE_EQ(plan_cost(*rs_t, stats), 2006.0);
  EXPECT_DOUBLE_EQ(plan_cost(*best, stats), 2006.0);
  std::function<bool(const LogicalNode&)> bottom_has_s = [&](const LogicalNode& n) {
    if (n.as<ScanOp>()) return false;
    const bool leaf_join = n.inputs[0]->as<ScanOp>() && n.inputs[1]->as<ScanOp>();
    if (leaf_join) return n.schema.contains("S.r");
    return bottom_has_s(*n.inputs[0]) || bottom_has_s(*n.inputs[1]);
  };
  EXPECT_TRUE(bottom_has_s(*best));
}

TEST(JoinOrder, ThreeRelationsMatchExhaustive) {
  for (const auto& c : hmdap::testing::join_graph_corpus(3, 5, 8)) {
    if (c.relations.size() != 3) continue;
    const auto dp = plan_cost(*choose_join_order(c.relations, c.edges, c.stats), c.stats);
    EXPECT_DOUBLE_EQ(dp, hmdap::testing::exhaustive_join_cost(c.relations, c.edges, c.stats).min_cost) << c.description;
  }
}

TEST(JoinOrder, GreedyBeyondDpLimitIsConnected) {
  // A chain of 8 relations goes through the greedy path.
  StatsMap stats;
  std::vector<PlanPtr> rels;
  std::vector<JoinKey> edges;
  for (int i = 0; i < 8; ++i) {
    const auto name = "g" + std::to_string(i);
    stats[name] = table(10 * (i + 1), {{"l", 5}, {"r", 5}});
    rels.push_back(make_scan(name, Schema{{"l", ColumnType::Int64}, {"r", ColumnType::Int64}}));
    if (i) edges.push_back({"g" + std::to_string(i - 1) + ".r", name + ".l"});
  }
  const auto plan = choose_join_order(rels, edges, stats);
  EXPECT_EQ(plan->schema.size(), 16u);
  std::function<void(const LogicalNode&)> check = [&](const LogicalNode& n) {
    if (const auto* j = n.as<JoinOp>()) {
      EXPECT_FALSE(j->keys.empty());
    }
    for (const auto& in : n.inputs) check(*in);
  };
  check(*plan);
}

TEST(Rewrite, PushdownBelowJoin) {
  MemoryTables t;
  t.add("trips", Relation(Schema{{"fare", ColumnType::Float64}, {"zone", ColumnType::Int64}}));
  t.add("zones", Relation(Schema{{"zone", ColumnType::Int64}}));
  const auto join = make_join(make_scan("trips", t.table_schema("trips")), make_scan("zones", t.table_schema("zones")),
                              {{"trips.zone", "zones.zone"}});
  const auto plan = make_filter(join, compare(CompareOp::Gt, col("trips.fare"), lit(Value(1))));
  const auto pushed = push_down_predicates(plan);
  ASSERT_TRUE(pushed->as<JoinOp>()) << explain(*pushed);
  EXPECT_TRUE(pushed->inputs[0]->as<FilterOp>());
  EXPECT_TRUE(pushed->inputs[0]->inputs[0]->as<ScanOp>());
  EXPECT_TRUE(pushed->inputs[1]->as<ScanOp>());
}

TEST(Rewrite, OptimizeKeepsSchema) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    auto db = hmdap::testing::random_database(rng, 4, 20);
    const auto plan = sql::plan_sql(hmdap::testing::random_query(rng, db), db.tables);
    EXPECT_EQ(optimize(plan, db.stats)->schema, plan->schema);
    EXPECT_EQ(optimize(plan, {})->schema, plan->schema);
  }
}

// Semantic preservation: optimized and unoptimized plans produce the same
// multiset on random queries.
TEST(RewriteProperty, OptimizePreservesResults) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    auto db = hmdap::testing::random_database(rng, 4, 40);
    const auto text = hmdap::testing::random_query(rng, db);
    const auto plan = sql::plan_sql(text, db.tables);
    const auto a = exec::execute(*exec::compile_physical(plan, db.stats, db.tables), 1);
    const auto b = exec::execute(*exec::compile_physical(optimize(plan, db.stats), db.stats, db.tables), 1);
    ASSERT_TRUE(multiset_equal(a, b)) << text << "\n" << describe_difference(a, b);
  }
}
