#include <map>
#include <set>

#include "hmdap/error.hpp"
#include "hmdap/sql.hpp"

namespace hmdap::sql {

namespace {

struct ScopeColumn {
  std::string table;
  std::string column;
  std::string qualified;
  ColumnType type;
};

/// Columns visible to a query block, in FROM order.
class Scope {
 public:
  void add_table(const std::string& table, const Schema& schema) {
    for (const auto& c : schema.columns()) columns_.push_back({table, c.name, qualify(table, c.name), c.type});
  }

  const std::vector<ScopeColumn>& columns() const { return columns_; }

  std::optional<ScopeColumn> find(const std::string& name) const {
    std::vector<const ScopeColumn*> hits;
    const auto dot = name.find('.');
    for (const auto& c : columns_) {
      const bool match = dot == std::string::npos
                             ? c.column == name
                             : (c.table == name.substr(0, dot) && c.column == name.substr(dot + 1));
      if (match) hits.push_back(&c);
    }
    if (hits.size() > 1) {
      throw Error(ErrorCode::Plan, "ambiguous column '" + name + "'; qualify it as table.column");
    }
    if (hits.empty()) return std::nullopt;
    return *hits.front();
  }

  ScopeColumn resolve(const std::string& name) const {
    if (auto c = find(name)) return *c;
    throw Error(ErrorCode::Plan, "unknown column '" + name + "'");
  }

  /// Bare column name when unique across the scope, else table.column.
  std::string display_name(const ScopeColumn& c) const {
    std::size_t same = 0;
    for (const auto& o : columns_) same += o.column == c.column;
    return same == 1 ? c.column : c.qualified;
  }

  bool table_has(const std::string& table, const std::string& qualified) const {
    for (const auto& c : columns_) {
      if (c.table == table && c.qualified == qualified) return true;
    }
    return false;
  }

 private:
  std::vector<ScopeColumn> columns_;
};

ExprPtr qualify_columns(const ExprPtr& e, const Scope& scope) {
  return rewrite_columns(e, [&](const std::string& name) -> std::optional<std::string> {
    return scope.resolve(name).qualified;
  });
}

std::string default_name(const SelectItem& item, const Scope& scope) {
  if (item.alias) return *item.alias;
  if (const auto* c = std::get_if<ColumnRef>(&item.expr->node)) {
    if (c->name == kGroupingIdColumn && !scope.find(c->name)) return c->name;
    return scope.display_name(scope.resolve(c->name));
  }
  return to_sql(*item.expr);
}

/// Rewrites a select expression of an aggregate query over the Aggregate
/// node's output: aggregates become references to their output columns, bare
/// columns must be grouping columns.
class AggregateRewriter {
 public:
  AggregateRewriter(const Scope& scope, const std::set<std::string>& groups) : scope_(scope), groups_(groups) {}

  ExprPtr rewrite(const ExprPtr& e) {
    if (const auto* agg = std::get_if<Aggregate>(&e->node)) {
      auto qualified = aggregate(agg->func, agg->arg ? qualify_columns(agg->arg, scope_) : nullptr);
      for (std::size_t i = 0; i < aggregates_.size(); ++i) {
        if (expr_equal(*aggregates_[i], *qualified)) return col(names_[i]);
      }
      aggregates_.push_back(qualified);
      names_.push_back("agg" + std::to_string(names_.size()));
      return col(names_.back());
    }
    if (const auto* c = std::get_if<ColumnRef>(&e->node)) {
      if (c->name == kGroupingIdColumn && !scope_.find(c->name)) return e;
      const auto resolved = scope_.resolve(c->name);
      if (!groups_.contains(resolved.qualified)) {
        throw Error(ErrorCode::Plan, "column '" + c->name +
                                         "' must appear in GROUP BY or be used in an aggregate function");
      }
      return col(resolved.qualified);
    }
    if (const auto* a = std::get_if<Arith>(&e->node)) return arith(a->op, rewrite(a->lhs), rewrite(a->rhs));
    if (const auto* c = std::get_if<Compare>(&e->node)) return compare(c->op, rewrite(c->lhs), rewrite(c->rhs));
    if (const auto* l = std::get_if<Logic>(&e->node)) {
      if (l->op == LogicOp::Not) return logic_not(rewrite(l->args[0]));
      auto lhs = rewrite(l->args[0]);
      auto rhs = rewrite(l->args[1]);
      return l->op == LogicOp::And ? logic_and(lhs, rhs) : logic_or(lhs, rhs);
    }
    return e;  // literal
  }

  const std::vector<ExprPtr>& aggregates() const { return aggregates_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  const Scope& scope_;
  const std::set<std::string>& groups_;
  std::vector<ExprPtr> aggregates_;
  std::vector<std::string> names_;
};

}  // namespace

PlanPtr plan_query(const SelectStatement& stmt, const TableProvider& tables) {
  Scope scope;
  std::set<std::string> seen_tables;
  auto scan_table = [&](const std::string& table) {
    if (!tables.has_table(table)) throw Error(ErrorCode::Plan, "unknown table '" + table + "'");
    if (!seen_tables.insert(table).second) {
      throw Error(ErrorCode::Plan, "table '" + table + "' appears more than once in FROM");
    }
    const auto schema = tables.table_schema(table);
    scope.add_table(table, schema);
    return make_scan(table, schema);
  };

  PlanPtr plan = scan_table(stmt.from);
  for (const auto& j : stmt.joins) {
    auto right = scan_table(j.table);
    std::vector<JoinKey> keys;
    for (const auto& [a, b] : j.on) {
      const auto ca = scope.resolve(a);
      const auto cb = scope.resolve(b);
      const bool a_new = ca.table == j.table;
      const bool b_new = cb.table == j.table;
      if (a_new == b_new) {
        throw Error(ErrorCode::Plan, "join condition " + a + " = " + b + " must compare a column of '" + j.table +
                                         "' with a column of a preceding table");
      }
      keys.push_back(a_new ? JoinKey{cb.qualified, ca.qualified} : JoinKey{ca.qualified, cb.qualified});
    }
    plan = make_join(plan, right, std::move(keys));
  }

  if (stmt.where) plan = make_filter(plan, qualify_columns(stmt.where, scope));

  bool is_aggregate = !stmt.group_by.empty();
  for (const auto& item : stmt.select) is_aggregate = is_aggregate || (item.expr && contains_aggregate(*item.expr));

  std::vector<ExprPtr> exprs;
  std::vector<std::string> names;
  if (is_aggregate) {
    std::vector<std::string> groups;
    for (const auto& g : stmt.group_by) groups.push_back(scope.resolve(g).qualified);
    const std::set<std::string> group_set(groups.begin(), groups.end());
    if (group_set.size() != groups.size()) throw Error(ErrorCode::Plan, "duplicate column in GROUP BY");
    AggregateRewriter rewriter(scope, group_set);
    bool selected_grouping_id = false;
    for (const auto& item : stmt.select) {
      if (!item.expr) throw Error(ErrorCode::Plan, "SELECT * cannot be combined with aggregation");
      exprs.push_back(rewriter.rewrite(item.expr));
      names.push_back(default_name(item, scope));
      if (const auto* c = std::get_if<ColumnRef>(&exprs.back()->node); c && c->name == kGroupingIdColumn) {
        selected_grouping_id = true;
      }
    }
    plan = make_aggregate(plan, groups, stmt.group_mode, rewriter.aggregates(), rewriter.names());
    if (stmt.group_mode != GroupMode::Plain && !selected_grouping_id) {
      exprs.push_back(col(std::string(kGroupingIdColumn)));
      names.emplace_back(kGroupingIdColumn);
    }
  } else {
    for (const auto& item : stmt.select) {
      if (!item.expr) {
        for (const auto& c : scope.columns()) {
          exprs.push_back(col(c.qualified));
          names.push_back(scope.display_name(c));
        }
        continue;
      }
      exprs.push_back(qualify_columns(item.expr, scope));
      names.push_back(default_name(item, scope));
    }
  }
  plan = make_project(plan, exprs, names);

  if (!stmt.order_by.empty()) {
    std::vector<SortKey> keys;
    for (const auto& o : stmt.order_by) {
      if (plan->schema.contains(o.column)) {
        keys.push_back({o.column, o.descending});
        continue;
      }
      // A source column that is selected under another display name.
      std::optional<std::string> found;
      if (auto c = scope.find(o.column)) {
        for (std::size_t i = 0; i < exprs.size(); ++i) {
          const auto* ref = std::get_if<ColumnRef>(&exprs[i]->node);
          if (ref && ref->name == c->qualified) {
            found = names[i];
            break;
          }
        }
      }
      if (!found) {
        throw Error(ErrorCode::Plan, "ORDER BY column '" + o.column + "' must appear in the select list");
      }
      keys.push_back({*found, o.descending});
    }
    plan = make_sort(plan, std::move(keys));
  }
  if (stmt.limit) plan = make_limit(plan, *stmt.limit);
  return plan;
}

}  // namespace hmdap::sql
