#include "hmdap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <tuple>

#include "hmdap/error.hpp"

namespace hmdap::graph {

namespace {

bool value_less(const Value& a, const Value& b) { return total_order(a, b) < 0; }

void check_node_type(ColumnType t, const std::string& what) {
  if (t != ColumnType::Int64 && t != ColumnType::Utf8) {
    throw Error(ErrorCode::Type, what + " must be Int64 or Utf8, got " + std::string(to_string(t)));
  }
}

struct RawEdge {
  Value src, dst;
  double weight;
};

Graph build(ColumnType type, std::vector<RawEdge> raw, std::vector<Value> extra) {
  std::vector<Value> nodes = std::move(extra);
  for (const auto& e : raw) {
    nodes.push_back(e.src);
    nodes.push_back(e.dst);
  }
  std::sort(nodes.begin(), nodes.end(), value_less);
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  auto index = [&](const Value& v) {
    return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v, value_less) - nodes.begin());
  };
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& e : raw) edges.push_back({index(e.src), index(e.dst), e.weight});
  return Graph(type, std::move(nodes), std::move(edges));
}

}  // namespace

Graph::Graph(ColumnType node_type, std::vector<Value> nodes, std::vector<Edge> edges)
    : node_type_(node_type), nodes_(std::move(nodes)), edges_(std::move(edges)), out_(nodes_.size()) {
  check_node_type(node_type_, "node ids");
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& e = edges_[i];
    if (e.src >= nodes_.size() || e.dst >= nodes_.size()) throw Error(ErrorCode::Internal, "edge endpoint out of range");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
      throw Error(ErrorCode::InvalidArgument, "edge weights must be finite and non-negative");
    }
    out_[e.src].push_back(i);
  }
}

std::optional<std::size_t> Graph::find(const Value& node) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node, value_less);
  if (it == nodes_.end() || !(*it == node)) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

Graph relation_to_graph(const Relation& r, const std::string& src_col, const std::string& dst_col,
                        const std::optional<std::string>& weight_col, WorkerPool* pool) {
  const Schema& s = r.schema();
  auto column = [&](const std::string& name) {
    const auto i = s.find(name);
    if (!i) throw Error(ErrorCode::InvalidArgument, "unknown column '" + name + "'");
    return *i;
  };
  const auto src = column(src_col);
  const auto dst = column(dst_col);
  check_node_type(s[src].type, "source column '" + src_col + "'");
  check_node_type(s[dst].type, "destination column '" + dst_col + "'");
  if (s[src].type != s[dst].type) throw Error(ErrorCode::Type, "source and destination columns differ in type");
  std::optional<std::size_t> w;
  if (weight_col) {
    w = column(*weight_col);
    if (!is_numeric(s[*w].type)) throw Error(ErrorCode::Type, "weight column '" + *weight_col + "' must be numeric");
  }

  const auto& parts = r.partitions();
  std::vector<std::size_t> offsets(parts.size(), 0);
  for (std::size_t p = 1; p < parts.size(); ++p) offsets[p] = offsets[p - 1] + parts[p - 1].size();
  std::vector<std::vector<RawEdge>> per_part(parts.size());
  auto convert = [&](std::size_t p) {
    auto& out = per_part[p];
    out.reserve(parts[p].size());
    for (std::size_t i = 0; i < parts[p].size(); ++i) {
      const Row& row = parts[p][i];
      const auto row_no = std::to_string(offsets[p] + i);
      if (row[src].is_null()) throw Error(ErrorCode::InvalidArgument, "row " + row_no + " has a Null source node");
      if (row[dst].is_null()) throw Error(ErrorCode::InvalidArgument, "row " + row_no + " has a Null destination node");
      double weight = 1.0;
      if (w) {
        if (row[*w].is_null()) throw Error(ErrorCode::InvalidArgument, "row " + row_no + " has a Null weight");
        weight = row[*w].as_double();
        if (weight < 0.0) {
          throw Error(ErrorCode::InvalidArgument, "row " + row_no + " has negative weight " + row[*w].to_string());
        }
      }
      out.push_back({row[src], row[dst], weight});
    }
  };
  if (pool) {
    pool->parallel_for(parts.size(), convert);
  } else {
    for (std::size_t p = 0; p < parts.size(); ++p) convert(p);
  }
  std::vector<RawEdge> all;
  for (auto& part : per_part) all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  return build(s[src].type, std::move(all), {});
}

Graph make_graph(const std::vector<std::tuple<Value, Value, double>>& edges, const std::vector<Value>& extra_nodes) {
  std::optional<ColumnType> type;
  std::vector<RawEdge> raw;
  auto note = [&](const Value& v) {
    if (v.is_null()) throw Error(ErrorCode::InvalidArgument, "node ids must not be Null");
    if (!type) type = v.type();
    if (v.type() != type) throw Error(ErrorCode::Type, "node ids must share one type");
  };
  for (const auto& [s, d, w] : edges) {
    note(s);
    note(d);
    if (w < 0.0) throw Error(ErrorCode::InvalidArgument, "negative edge weight");
    raw.push_back({s, d, w});
  }
  for (const auto& v : extra_nodes) note(v);
  return build(type.value_or(ColumnType::Int64), std::move(raw), extra_nodes);
}

Relation shortest_paths(const Graph& g, const Value& source) {
  const auto start = g.find(source);
  if (!start) throw Error(ErrorCode::NotFound, "source node " + source.to_sql_literal() + " is not in the graph");
  const std::size_t n = g.nodes().size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::optional<std::size_t>> pred(n);
  std::vector<bool> done(n, false);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[*start] = 0.0;
  queue.emplace(0.0, *start);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = true;
    for (auto ei : g.out_edges()[u]) {
      const auto& e = g.edges()[ei];
      const double nd = d + e.weight;
      if (nd < dist[e.dst]) {
        dist[e.dst] = nd;
        pred[e.dst] = u;
        queue.emplace(nd, e.dst);
      }
    }
  }
  Schema schema({{"node", g.node_type()}, {"distance", ColumnType::Float64}, {"predecessor", g.node_type()}});
  std::vector<Row> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Row row{g.nodes()[i], Value(), Value()};
    if (std::isfinite(dist[i])) row[1] = Value(dist[i]);
    if (pred[i]) row[2] = g.nodes()[*pred[i]];
    rows.push_back(std::move(row));
  }
  return Relation(std::move(schema), std::move(rows));
}

Relation connected_components(const Graph& g) {
  const std::size_t n = g.nodes().size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : g.edges()) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::vector<std::int64_t> comp(n, -1);
  std::int64_t next = 0;
  // Nodes are sorted, so the first unvisited node is its component's minimum.
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (auto v : adj[u]) {
        if (comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  Schema schema({{"node", g.node_type()}, {"component_id", ColumnType::Int64}});
  std::vector<Row> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rows.push_back({g.nodes()[i], Value(comp[i])});
  return Relation(std::move(schema), std::move(rows));
}

Value node_from_text(const Graph& g, const std::string& text) {
  if (g.node_type() == ColumnType::Utf8) return Value(text);
  if (auto v = parse_int64(text)) return Value(*v);
  throw Error(ErrorCode::InvalidArgument, "'" + text + "' is not a valid Int64 node id");
}

}  // namespace hmdap::graph
