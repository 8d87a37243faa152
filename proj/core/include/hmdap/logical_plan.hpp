#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "hmdap/expression.hpp"
#include "hmdap/grouping.hpp"
#include "hmdap/relation.hpp"

namespace hmdap {

struct JoinKey {
  std::string left;
  std::string right;

  friend bool operator==(const JoinKey&, const JoinKey&) = default;
};

struct SortKey {
  std::string column;
  bool descending = false;

  friend bool operator==(const SortKey&, const SortKey&) = default;
};

struct ScanOp {
  std::string table;
};
struct FilterOp {
  ExprPtr predicate;
};
/// Output names live in the node schema.
struct ProjectOp {
  std::vector<ExprPtr> exprs;
};
/// Inner equi-join; output = left columns then right columns.
struct JoinOp {
  std::vector<JoinKey> keys;
};
/// Output = group columns, aggregate results, then Int64 grouping_id.
struct AggregateOp {
  std::vector<std::string> group_cols;
  GroupMode mode = GroupMode::Plain;
  std::vector<ExprPtr> aggregates;
};
struct SortOp {
  std::vector<SortKey> keys;
};
struct LimitOp {
  std::int64_t count = 0;
};

struct LogicalNode;
using PlanPtr = std::shared_ptr<const LogicalNode>;

/// Immutable relational operator tree. Columns are referenced by unique
/// names; scans qualify every column as `table.column`.
struct LogicalNode {
  std::variant<ScanOp, FilterOp, ProjectOp, JoinOp, AggregateOp, SortOp, LimitOp> op;
  std::vector<PlanPtr> inputs;
  Schema schema;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&op);
  }
};

std::string qualify(std::string_view table, std::string_view column);

PlanPtr make_scan(const std::string& table, const Schema& table_schema);
PlanPtr make_filter(PlanPtr input, ExprPtr predicate);
PlanPtr make_project(PlanPtr input, std::vector<ExprPtr> exprs, std::vector<std::string> names);
PlanPtr make_join(PlanPtr left, PlanPtr right, std::vector<JoinKey> keys);
PlanPtr make_aggregate(PlanPtr input, std::vector<std::string> group_cols, GroupMode mode,
                       std::vector<ExprPtr> aggregates, std::vector<std::string> aggregate_names);
PlanPtr make_sort(PlanPtr input, std::vector<SortKey> keys);
PlanPtr make_limit(PlanPtr input, std::int64_t count);

/// Indented operator tree including every operator argument.
std::string explain(const LogicalNode& plan);
/// Structural equality (operators, arguments and schemas).
bool plan_equal(const LogicalNode& a, const LogicalNode& b);

/// Type for a computed column; NULL-only expressions become Utf8.
ColumnType output_type(const Expression& e, const Schema& input);

}  // namespace hmdap
