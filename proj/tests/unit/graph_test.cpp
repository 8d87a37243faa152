#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hmdap/error.hpp"
#include "hmdap/graph.hpp"
#include "oracles.hpp"

using namespace hmdap;
using namespace hmdap::graph;

namespace {

Relation edges_relation(const std::vector<std::tuple<Value, Value, double>>& edges) {
  std::vector<Row> rows;
  for (const auto& [s, d, w] : edges) rows.push_back({s, d, Value(w)});
  return Relation(Schema{{"src", ColumnType::Utf8}, {"dst", ColumnType::Utf8}, {"w", ColumnType::Float64}}, rows);
}

struct RandomGraph {
  std::size_t n = 0;
  std::vector<hmdap::testing::WeightedEdge> edges;
  Graph graph{ColumnType::Int64, {}, {}};
};

RandomGraph random_graph(std::mt19937_64& rng) {
  RandomGraph g;
  g.n = 1 + rng() % 50;
  const std::size_t m = rng() % (3 * g.n + 1);
  std::vector<std::tuple<Value, Value, double>> triples;
  for (std::size_t i = 0; i < m; ++i) {
    const auto s = static_cast<std::int64_t>(rng() % g.n), d = static_cast<std::int64_t>(rng() % g.n);
    // Quarter-integer weights keep path sums exact.
    const double w = static_cast<double>(rng() % 40) * 0.25;
    g.edges.push_back({s, d, w});
    triples.emplace_back(Value(s), Value(d), w);
  }
  std::vector<Value> all;
  for (std::size_t i = 0; i < g.n; ++i) all.emplace_back(static_cast<std::int64_t>(i));
  g.graph = make_graph(triples, all);
  return g;
}

}  // namespace

TEST(Convert, OneEdgePerRowDefaultWeight) {
  const Relation r(Schema{{"a", ColumnType::Int64}, {"b", ColumnType::Int64}},
                   std::vector<Row>{{Value(1), Value(2)}, {Value(1), Value(2)}, {Value(2), Value(3)}});
  const auto g = relation_to_graph(r, "a", "b");
  EXPECT_EQ(g.edges().size(), 3u);
  EXPECT_EQ(g.nodes().size(), 3u);
  for (const auto& e : g.edges()) EXPECT_EQ(e.weight, 1.0);
  WorkerPool pool(3);
  EXPECT_EQ(relation_to_graph(repartition(r, 3), "a", "b", std::nullopt, &pool).edges().size(), 3u);
}

TEST(Convert, Errors) {
  const Relation nulls(Schema{{"a", ColumnType::Int64}, {"b", ColumnType::Int64}},
                       std::vector<Row>{{Value(1), Value(2)}, {Value(1), Value::null()}});
  try {
    relation_to_graph(nulls, "a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  EXPECT_THROW(relation_to_graph(edges_relation({{Value("x"), Value("y"), -1.0}}), "src", "dst", "w"), Error);
  EXPECT_THROW(relation_to_graph(nulls, "a", "nope"), Error);
}

TEST(ShortestPaths, ViaIntermediate) {
  const auto g = relation_to_graph(
      edges_relation({{Value("A"), Value("B"), 1.0}, {Value("B"), Value("C"), 2.0}, {Value("A"), Value("C"), 4.0}}), "src",
      "dst", "w");
  const auto rows = shortest_paths(g, Value("A")).rows();
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (Row{Value("A"), Value(0.0), Value::null()}));
  EXPECT_EQ(rows[2], (Row{Value("C"), Value(3.0), Value("B")}));
  EXPECT_THROW(shortest_paths(g, Value("Z")), Error);
}

TEST(ShortestPaths, IsolatedNodeIsNull) {
  const auto g = make_graph({{Value(1), Value(2), 1.0}}, {Value(9)});
  const auto rows = shortest_paths(g, Value(1)).rows();
  EXPECT_TRUE(rows.back()[1].is_null());
  EXPECT_TRUE(rows.back()[2].is_null());
}

TEST(Components, Basics) {
  const auto one = connected_components(make_graph({}, {Value(5)}));
  EXPECT_EQ(one.rows(), (std::vector<Row>{{Value(5), Value(0)}}));
  const auto two = connected_components(make_graph({{Value(1), Value(2), 1.0}, {Value(4), Value(3), 1.0}}));
  EXPECT_EQ(two.rows(), (std::vector<Row>{{Value(1), Value(0)}, {Value(2), Value(0)}, {Value(3), Value(1)}, {Value(4), Value(1)}}));
}

TEST(Graph, NodeFromText) {
  const auto g = make_graph({{Value(1), Value(2), 1.0}});
  EXPECT_EQ(node_from_text(g, "2"), Value(2));
  EXPECT_THROW(node_from_text(g, "two"), Error);
}

// Properties over random digraphs: Dijkstra equals Bellman-Ford, the
// triangle inequality holds on every edge, predecessor chains sum to the
// distance, and components match union-find.
TEST(GraphProperty, AgreesWithOracles) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 60; ++trial) {
    auto rg = random_graph(rng);
    const auto source = static_cast<std::int64_t>(rng() % rg.n);
    const auto expected = hmdap::testing::bellman_ford(rg.n, rg.edges, source);
    const auto rows = shortest_paths(rg.graph, Value(source)).rows();
    ASSERT_EQ(rows.size(), rg.n);
    std::vector<std::optional<double>> dist(rg.n);
    std::vector<std::optional<std::int64_t>> pred(rg.n);
    for (const auto& r : rows) {
      const auto v = static_cast<std::size_t>(r[0].as_int());
      if (!r[1].is_null()) dist[v] = r[1].as_float();
      if (!r[2].is_null()) pred[v] = r[2].as_int();
    }
    EXPECT_EQ(dist, expected);
    for (const auto& e : rg.edges) {
      if (dist[e.src]) {
        ASSERT_TRUE(dist[e.dst]);
        EXPECT_LE(*dist[e.dst], *dist[e.src] + e.weight + 1e-9);
      }
    }
    for (std::size_t v = 0; v < rg.n; ++v) {
      if (!dist[v]) continue;
      double sum = 0;
      std::size_t cur = v, steps = 0;
      while (pred[cur]) {
        const auto p = static_cast<std::size_t>(*pred[cur]);
        double best = INFINITY;
        for (const auto& e : rg.edges) {
          if (e.src == static_cast<std::int64_t>(p) && e.dst == static_cast<std::int64_t>(cur)) best = std::min(best, e.weight);
        }
        sum += best;
        cur = p;
        ASSERT_LE(++steps, rg.n) << "predecessor cycle";
      }
      EXPECT_EQ(cur, static_cast<std::size_t>(source));
      EXPECT_NEAR(sum, *dist[v], 1e-9);
    }
    const auto uf = hmdap::testing::union_find_components(rg.n, rg.edges);
    const auto comp = connected_components(rg.graph).rows();
    for (std::size_t a = 0; a < rg.n; ++a) {
      for (std::size_t b = a + 1; b < rg.n; ++b) {
        EXPECT_EQ(comp[a][1] == comp[b][1], uf[a] == uf[b]);
      }
    }
  }
}
