#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hmdap/catalog.hpp"
#include "hmdap/expression.hpp"
#include "hmdap/grouping.hpp"
#include "hmdap/logical_plan.hpp"

namespace hmdap::sql {

/// `*` is represented by a null expression.
struct SelectItem {
  ExprPtr expr;
  std::optional<std::string> alias;
};

struct JoinClause {
  std::string table;
  /// Column pairs of `ON a = b [AND c = d ...]`, as written.
  std::vector<std::pair<std::string, std::string>> on;
};

struct OrderItem {
  std::string column;
  bool descending = false;
};

struct SelectStatement {
  std::vector<SelectItem> select;
  std::string from;
  std::vector<JoinClause> joins;
  ExprPtr where;
  std::vector<std::string> group_by;
  GroupMode group_mode = GroupMode::Plain;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
};

inline constexpr int kMaxExpressionDepth = 200;

/// Parses one SELECT statement. Keywords are case-insensitive, identifiers
/// case-sensitive. Throws Error{Syntax} carrying the 1-based position of the
/// offending token.
SelectStatement parse_sql(std::string_view text);

/// Canonical text that parses back to an equal statement.
std::string print_sql(const SelectStatement& stmt);

bool ast_equal(const SelectStatement& a, const SelectStatement& b);

/// Resolves names against the provider's tables and lowers to a plan:
/// Limit(Sort(Project(Aggregate?(Filter?(Join*(Scan)))))).
PlanPtr plan_query(const SelectStatement& stmt, const TableProvider& tables);

inline PlanPtr plan_sql(std::string_view text, const TableProvider& tables) {
  return plan_query(parse_sql(text), tables);
}

}  // namespace hmdap::sql
