#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hmdap/relation.hpp"
#include "hmdap/worker_pool.hpp"

namespace hmdap::graph {

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 1.0;
};

/// Directed weighted multigraph over Int64 or Utf8 node ids. Nodes are
/// indexed in ascending value order.
class Graph {
 public:
  Graph(ColumnType node_type, std::vector<Value> nodes, std::vector<Edge> edges);

  ColumnType node_type() const noexcept { return node_type_; }
  const std::vector<Value>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Outgoing edge indices per node, in edge order.
  const std::vector<std::vector<std::size_t>>& out_edges() const noexcept { return out_; }
  std::optional<std::size_t> find(const Value& node) const;

 private:
  ColumnType node_type_;
  std::vector<Value> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
};

/// One edge per row; weights default to 1.0. Partitions are converted in
/// parallel when a pool is given.
Graph relation_to_graph(const Relation& r, const std::string& src_col, const std::string& dst_col,
                        const std::optional<std::string>& weight_col = std::nullopt, WorkerPool* pool = nullptr);

/// Graph from (src, dst, weight) triples.
Graph make_graph(const std::vector<std::tuple<Value, Value, double>>& edges, const std::vector<Value>& extra_nodes = {});

/// Dijkstra from `source`: (node, distance, predecessor) ordered by node.
/// Unreachable nodes get Null distance and predecessor.
Relation shortest_paths(const Graph& g, const Value& source);

/// Weakly connected components: (node, component_id), ids dense and ordered
/// by each component's smallest node.
Relation connected_components(const Graph& g);

/// Interprets text as a node id of the graph's type (Int64 ids parse).
Value node_from_text(const Graph& g, const std::string& text);

}  // namespace hmdap::graph
