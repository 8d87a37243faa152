#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmdap/logical_plan.hpp"
#include "hmdap/relation.hpp"

namespace hmdap::opt {

struct ColumnStats {
  /// Distinct non-null values (exact or estimated).
  double ndv_estimate = 0.0;
  Value min;
  Value max;
  std::int64_t null_count = 0;

  friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

struct TableStats {
  std::int64_t row_count = 0;
  std::map<std::string, ColumnStats> columns;

  friend bool operator==(const TableStats&, const TableStats&) = default;
};

using StatsMap = std::map<std::string, TableStats, std::less<>>;

inline constexpr std::size_t kDefaultSampleThreshold = 10'000;
/// Selectivity used when the model has nothing better.
inline constexpr double kDefaultSelectivity = 1.0 / 3.0;

/// Uniform reservoir sample of min(target_size, |r|) rows in one partition;
/// deterministic for a fixed seed.
Relation sample_relation(const Relation& r, std::size_t target_size, std::uint64_t seed);

/// Chao84 distinct-value estimate from a sample's frequency profile:
/// d + f1^2 / (2 f2), or d + f1 (f1 - 1) / 2 when f2 is zero.
double chao84(double distinct, double singletons, double doubletons);

/// Per-partition partial statistics; merge is associative and commutative.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(const Schema& schema, bool track_distinct);
  /// Copies are independent.
  StatsAccumulator(const StatsAccumulator& other);
  StatsAccumulator& operator=(const StatsAccumulator& other);
  StatsAccumulator(StatsAccumulator&&) noexcept = default;
  StatsAccumulator& operator=(StatsAccumulator&&) noexcept = default;
  ~StatsAccumulator();
  void add(const Row& row);
  void merge(const StatsAccumulator& other);
  /// Stats with exact NDVs when distinct values were tracked, zero otherwise.
  TableStats finish() const;

 private:
  struct Column;
  Schema schema_;
  bool track_distinct_;
  std::int64_t rows_ = 0;
  std::vector<std::shared_ptr<Column>> columns_;
};

/// Exact statistics when |r| <= sample_threshold. Otherwise min/max/null
/// counts come from a full pass and NDVs from Chao84 over a reservoir sample
/// of sample_threshold rows, clamped to [sample distinct, non-null rows].
TableStats collect_stats(const Relation& r, std::size_t sample_threshold = kDefaultSampleThreshold,
                         std::uint64_t seed = 0);

/// Estimated rows for a plan node. Throws Plan when a scanned table has no
/// statistics.
double estimate_cardinality(const LogicalNode& node, const StatsMap& stats);

/// Selectivity in [0, 1] of a predicate evaluated over `input`.
double estimate_selectivity(const Expression& predicate, const LogicalNode& input, const StatsMap& stats);

/// Sum of the estimated cardinalities of every node in the plan.
double plan_cost(const LogicalNode& plan, const StatsMap& stats);

/// Join tree over `relations` using the equi-join `edges` (columns qualified
/// by the relations' schemas). Exact DP over connected subsets for up to
/// kMaxDpRelations inputs, greedy beyond. Throws Plan when the join graph is
/// disconnected.
inline constexpr std::size_t kMaxDpRelations = 6;
PlanPtr choose_join_order(const std::vector<PlanPtr>& relations, const std::vector<JoinKey>& edges,
                          const StatsMap& stats);

/// Rewrite passes, also used individually by tests.
PlanPtr push_down_predicates(const PlanPtr& plan);
PlanPtr reorder_joins(const PlanPtr& plan, const StatsMap& stats);
PlanPtr prune_columns(const PlanPtr& plan);

/// Pushdown, join reordering, column pruning. Output is semantically
/// equivalent to the input, including its output schema.
PlanPtr optimize(const PlanPtr& plan, const StatsMap& stats);

nlohmann::json stats_to_json(const StatsMap& stats);
StatsMap stats_from_json(const nlohmann::json& doc);
inline constexpr std::string_view kStatsFileName = "stats.json";
void save_stats(const std::filesystem::path& path, const StatsMap& stats);
/// Empty map when the file does not exist.
StatsMap load_stats(const std::filesystem::path& path);

}  // namespace hmdap::opt
