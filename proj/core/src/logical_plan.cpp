#include "hmdap/logical_plan.hpp"

#include <sstream>

#include "hmdap/error.hpp"

namespace hmdap {

std::string qualify(std::string_view table, std::string_view column) {
  std::string out(table);
  out += '.';
  out += column;
  return out;
}

ColumnType output_type(const Expression& e, const Schema& input) {
  auto t = infer_type(e, input);
  return t ? *t : ColumnType::Utf8;
}

namespace {

PlanPtr make_node(auto op, std::vector<PlanPtr> inputs, Schema schema) {
  return std::make_shared<const LogicalNode>(LogicalNode{std::move(op), std::move(inputs), std::move(schema)});
}

void check_comparable(const Schema& ls, const std::string& l, const Schema& rs, const std::string& r) {
  const auto lt = ls[ls.index_of(l)].type;
  const auto rt = rs[rs.index_of(r)].type;
  if (lt != rt && !(is_numeric(lt) && is_numeric(rt))) {
    throw Error(ErrorCode::Type, "join key " + l + " (" + std::string(to_string(lt)) + ") is not comparable with " +
                                     r + " (" + std::string(to_string(rt)) + ")");
  }
}

}  // namespace

PlanPtr make_scan(const std::string& table, const Schema& table_schema) {
  std::vector<Column> cols;
  for (const auto& c : table_schema.columns()) cols.push_back({qualify(table, c.name), c.type});
  return make_node(ScanOp{table}, {}, Schema(std::move(cols)));
}

PlanPtr make_filter(PlanPtr input, ExprPtr predicate) {
  if (contains_aggregate(*predicate)) {
    throw Error(ErrorCode::Plan, "aggregate functions are not allowed in WHERE: " + to_sql(*predicate));
  }
  auto t = infer_type(*predicate, input->schema);
  if (t && *t != ColumnType::Bool) {
    throw Error(ErrorCode::Type, "predicate must be Bool, got " + std::string(to_string(*t)) + ": " +
                                     to_sql(*predicate));
  }
  auto schema = input->schema;
  return make_node(FilterOp{std::move(predicate)}, {std::move(input)}, std::move(schema));
}

PlanPtr make_project(PlanPtr input, std::vector<ExprPtr> exprs, std::vector<std::string> names) {
  if (exprs.size() != names.size()) throw Error(ErrorCode::Internal, "project arity mismatch");
  std::vector<Column> cols;
  for (std::size_t i = 0; i < exprs.size(); ++i) {
    if (contains_aggregate(*exprs[i])) {
      throw Error(ErrorCode::Plan, "aggregate in projection without aggregation: " + to_sql(*exprs[i]));
    }
    cols.push_back({names[i], output_type(*exprs[i], input->schema)});
  }
  Schema schema;
  try {
    schema = Schema(std::move(cols));
  } catch (const Error& e) {
    throw Error(ErrorCode::Plan, std::string(e.what()) + "; use AS to rename output columns");
  }
  return make_node(ProjectOp{std::move(exprs)}, {std::move(input)}, std::move(schema));
}

PlanPtr make_join(PlanPtr left, PlanPtr right, std::vector<JoinKey> keys) {
  for (const auto& k : keys) check_comparable(left->schema, k.left, right->schema, k.right);
  auto cols = left->schema.columns();
  for (const auto& c : right->schema.columns()) cols.push_back(c);
  return make_node(JoinOp{std::move(keys)}, {std::move(left), std::move(right)}, Schema(std::move(cols)));
}

PlanPtr make_aggregate(PlanPtr input, std::vector<std::string> group_cols, GroupMode mode,
                       std::vector<ExprPtr> aggregates, std::vector<std::string> aggregate_names) {
  if (aggregates.size() != aggregate_names.size()) throw Error(ErrorCode::Internal, "aggregate arity mismatch");
  if (group_cols.size() >= 64) throw Error(ErrorCode::Plan, "too many grouping columns");
  grouping_sets(group_cols, mode);  // validates duplicates and cube width
  std::vector<Column> cols;
  for (const auto& g : group_cols) cols.push_back(input->schema[input->schema.index_of(g)]);
  for (std::size_t i = 0; i < aggregates.size(); ++i) {
    const auto* agg = std::get_if<Aggregate>(&aggregates[i]->node);
    if (!agg) throw Error(ErrorCode::Internal, "aggregate list holds a non-aggregate expression");
    cols.push_back({aggregate_names[i], output_type(*aggregates[i], input->schema)});
  }
  cols.push_back({std::string(kGroupingIdColumn), ColumnType::Int64});
  return make_node(AggregateOp{std::move(group_cols), mode, std::move(aggregates)}, {std::move(input)},
                   Schema(std::move(cols)));
}

PlanPtr make_sort(PlanPtr input, std::vector<SortKey> keys) {
  for (const auto& k : keys) input->schema.index_of(k.column);
  auto schema = input->schema;
  return make_node(SortOp{std::move(keys)}, {std::move(input)}, std::move(schema));
}

PlanPtr make_limit(PlanPtr input, std::int64_t count) {
  if (count < 0) throw Error(ErrorCode::Plan, "LIMIT must be non-negative");
  auto schema = input->schema;
  return make_node(LimitOp{count}, {std::move(input)}, std::move(schema));
}

namespace {

void explain_into(const LogicalNode& n, int depth, std::ostringstream& out) {
  out << std::string(depth * 2, ' ');
  if (const auto* s = n.as<ScanOp>()) {
    out << "Scan " << s->table;
  } else if (const auto* f = n.as<FilterOp>()) {
    out << "Filter " << to_sql(*f->predicate);
  } else if (const auto* p = n.as<ProjectOp>()) {
    out << "Project ";
    for (std::size_t i = 0; i < p->exprs.size(); ++i) {
      out << (i ? ", " : "") << to_sql(*p->exprs[i]) << " AS " << n.schema[i].name;
    }
  } else if (const auto* j = n.as<JoinOp>()) {
    out << "Join ";
    for (std::size_t i = 0; i < j->keys.size(); ++i) {
      out << (i ? " AND " : "") << j->keys[i].left << " = " << j->keys[i].right;
    }
  } else if (const auto* a = n.as<AggregateOp>()) {
    out << "Aggregate " << to_string(a->mode) << " [";
    for (std::size_t i = 0; i < a->group_cols.size(); ++i) out << (i ? ", " : "") << a->group_cols[i];
    out << "] ";
    for (std::size_t i = 0; i < a->aggregates.size(); ++i) {
      out << (i ? ", " : "") << to_sql(*a->aggregates[i]) << " AS " << n.schema[a->group_cols.size() + i].name;
    }
  } else if (const auto* s = n.as<SortOp>()) {
    out << "Sort ";
    for (std::size_t i = 0; i < s->keys.size(); ++i) {
      out << (i ? ", " : "") << s->keys[i].column << (s->keys[i].descending ? " DESC" : " ASC");
    }
  } else if (const auto* l = n.as<LimitOp>()) {
    out << "Limit " << l->count;
  }
  out << "  -> " << n.schema.to_string() << '\n';
  for (const auto& in : n.inputs) explain_into(*in, depth + 1, out);
}

}  // namespace

std::string explain(const LogicalNode& plan) {
  std::ostringstream out;
  explain_into(plan, 0, out);
  return out.str();
}

bool plan_equal(const LogicalNode& a, const LogicalNode& b) { return explain(a) == explain(b); }

}  // namespace hmdap
