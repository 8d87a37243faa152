#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "hmdap/catalog.hpp"
#include "hmdap/logical_plan.hpp"
#include "hmdap/optimizer.hpp"
#include "hmdap/worker_pool.hpp"

namespace hmdap::exec {

enum class BuildSide { Left, Right };

struct TableScanExec {
  std::string table;
  std::shared_ptr<const Relation> data;
};
struct FilterExec {
  ExprPtr predicate;
};
struct ProjectExec {
  std::vector<ExprPtr> exprs;
};
struct HashJoinExec {
  std::vector<JoinKey> keys;
  BuildSide build = BuildSide::Left;
};
struct HashAggregateExec {
  std::vector<std::string> group_cols;
  GroupMode mode = GroupMode::Plain;
  std::vector<GroupingSet> sets;
  std::vector<ExprPtr> aggregates;
};
struct SortExec {
  std::vector<SortKey> keys;
};
struct LimitExec {
  std::int64_t count = 0;
};

struct PhysicalNode;
using PhysicalPtr = std::shared_ptr<const PhysicalNode>;

struct PhysicalNode {
  std::variant<TableScanExec, FilterExec, ProjectExec, HashJoinExec, HashAggregateExec, SortExec, LimitExec> op;
  std::vector<PhysicalPtr> inputs;
  Schema schema;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&op);
  }
};

/// One physical operator per logical one. Table data is bound from
/// `tables`; the hash-join build side is the input with the smaller estimate
/// (left on ties or when statistics are missing).
PhysicalPtr compile_physical(const PlanPtr& plan, const opt::StatsMap& stats, const TableProvider& tables);

/// Partition-parallel evaluation. Result is identical as a multiset for any
/// worker count, and identical as a sequence below a Sort.
Relation execute(const PhysicalNode& plan, WorkerPool& pool);
Relation execute(const PhysicalNode& plan, std::size_t workers);

std::string explain(const PhysicalNode& plan);

/// Single-threaded tree walk with nested-loop joins and naive grouping; the
/// correctness oracle for compile_physical + execute.
Relation reference_interpret(const LogicalNode& plan, const TableProvider& tables);

struct QueryOptions {
  std::size_t workers = 1;
  bool optimize = true;
};

/// parse -> plan -> optimize -> compile -> execute, with output columns
/// named as in the select list.
Relation run_query(std::string_view sql, const TableProvider& tables, const opt::StatsMap& stats,
                   const QueryOptions& options = {});

}  // namespace hmdap::exec
