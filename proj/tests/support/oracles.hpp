#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hmdap/logical_plan.hpp"
#include "hmdap/ml.hpp"
#include "hmdap/optimizer.hpp"
#include "hmdap/orchestrator.hpp"
#include "hmdap/relation.hpp"

namespace hmdap::testing {

// ---- join order --------------------------------------------------------

/// Minimum plan_cost over every join tree without cross products, built by
/// enumerating all ordered bushy trees.
struct ExhaustiveResult {
  double min_cost = 0.0;
  std::size_t trees = 0;
};
ExhaustiveResult exhaustive_join_cost(const std::vector<PlanPtr>& relations, const std::vector<JoinKey>& edges,
                                      const opt::StatsMap& stats);

/// Relation r{i} with one Int64 column k{j} per neighbour j, random row
/// counts and NDVs, and the matching equi-join edges.
struct JoinCorpusCase {
  std::vector<PlanPtr> relations;
  std::vector<JoinKey> edges;
  opt::StatsMap stats;
  std::string description;
};
/// Every connected graph on 2..max_relations labelled vertices, each with
/// `variants` random statistics draws.
std::vector<JoinCorpusCase> join_graph_corpus(std::size_t max_relations, std::size_t variants, std::uint64_t seed);

// ---- graph ----------------------------------------------------------------

struct WeightedEdge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  double weight = 0.0;
};
/// Bellman-Ford distances over nodes 0..n-1; nullopt when unreachable.
std::vector<std::optional<double>> bellman_ford(std::size_t n, const std::vector<WeightedEdge>& edges,
                                                std::int64_t source);
/// Undirected union-find component label per node (the smallest member).
std::vector<std::int64_t> union_find_components(std::size_t n, const std::vector<WeightedEdge>& edges);

// ---- ml -----------------------------------------------------------------

/// Optimal k=2 inertia by enumerating every 2-partition of the points with
/// the first point fixed in cluster 0.
double brute_force_two_means(const std::vector<std::vector<double>>& points);

/// Central finite differences of the mean cross-entropy, computed with a
/// textbook log-loss independent of the library's softplus form.
std::vector<double> finite_difference_gradient(const std::vector<double>& weights, double bias,
                                               const std::vector<std::vector<double>>& x,
                                               const std::vector<double>& y, double h);
double naive_log_loss(const std::vector<double>& weights, double bias, const std::vector<std::vector<double>>& x,
                      const std::vector<double>& y);

// ---- orchestration ----------------------------------------------------------

/// Inner equi-join written independently of pipeline::join_results: for
/// each relational row in order, each matching ML row in order.
Relation nested_loop_join(const Relation& left, const Relation& right, const std::vector<std::string>& keys);

pipeline::PipelineConfig random_pipeline_config(std::mt19937_64& rng);

// ---- misc -----------------------------------------------------------------

/// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const;

 private:
  std::filesystem::path path_;
};

}  // namespace hmdap::testing
