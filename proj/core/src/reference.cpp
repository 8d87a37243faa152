#include <algorithm>
#include <cmath>
#include <limits>

#include "hmdap/error.hpp"
#include "hmdap/executor.hpp"

namespace hmdap::exec {

namespace {

__extension__ using Int128 = __int128;

struct Table {
  Schema schema;
  std::vector<Row> rows;
};

bool is_true(const Value& v) { return v.is_bool() && v.as_bool(); }

/// Null sorts before everything; otherwise the SQL comparison decides.
int compare_values(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return a.is_null() == b.is_null() ? 0 : (a.is_null() ? -1 : 1);
  if (is_true(apply_compare(CompareOp::Lt, a, b))) return -1;
  if (is_true(apply_compare(CompareOp::Gt, a, b))) return 1;
  return 0;
}

int compare_rows(const Row& a, const Row& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (int c = compare_values(a[i], b[i])) return c;
  }
  return 0;
}

Value aggregate_group(const Aggregate& agg, const std::vector<const Row*>& rows, const Schema& schema) {
  if (!agg.arg) return Value(static_cast<std::int64_t>(rows.size()));
  std::vector<Value> values;
  for (const Row* r : rows) {
    Value v = eval_expression(*agg.arg, *r, schema);
    if (!v.is_null()) values.push_back(std::move(v));
  }
  switch (agg.func) {
    case AggFunc::Count: return Value(static_cast<std::int64_t>(values.size()));
    case AggFunc::Sum: {
      if (values.empty()) return {};
      if (values.front().is_int()) {
        Int128 total = 0;
        for (const auto& v : values) total += v.as_int();
        if (total > std::numeric_limits<std::int64_t>::max() || total < std::numeric_limits<std::int64_t>::min()) {
          throw Error(ErrorCode::Runtime, "integer overflow in SUM");
        }
        return Value(static_cast<std::int64_t>(total));
      }
      double total = 0.0;
      for (const auto& v : values) total += v.as_double();
      if (!std::isfinite(total)) throw Error(ErrorCode::Runtime, "floating-point overflow in SUM");
      return Value(total);
    }
    case AggFunc::Avg: {
      if (values.empty()) return {};
      double total = 0.0;
      for (const auto& v : values) total += v.as_double();
      const double avg = total / static_cast<double>(values.size());
      if (!std::isfinite(avg)) throw Error(ErrorCode::Runtime, "floating-point overflow in AVG");
      return Value(avg);
    }
    case AggFunc::Min:
    case AggFunc::Max: {
      if (values.empty()) return {};
      Value best = values.front();
      for (const auto& v : values) {
        const int c = compare_values(v, best);
        if (agg.func == AggFunc::Min ? c < 0 : c > 0) best = v;
      }
      return best;
    }
  }
  return {};
}

/// Grouping-id masks in output order, derived directly from the mode.
std::vector<std::uint64_t> masks_for(GroupMode mode, std::size_t d) {
  std::vector<std::uint64_t> masks;
  const std::uint64_t all = d == 0 ? 0 : (~std::uint64_t{0} >> (64 - d));
  switch (mode) {
    case GroupMode::Plain: masks.push_back(0); break;
    case GroupMode::Rollup:
      // Keep the first `kept` columns; roll up the rest.
      for (std::size_t kept = d + 1; kept-- > 0;) masks.push_back(all & ~((std::uint64_t{1} << kept) - 1));
      break;
    case GroupMode::Cube:
      for (std::uint64_t m = 0; m <= all; ++m) masks.push_back(m);
      break;
  }
  return masks;
}

Table interpret(const LogicalNode& node, const TableProvider& tables) {
  if (const auto* s = node.as<ScanOp>()) {
    auto data = tables.table_data(s->table);
    return {node.schema, data->rows()};
  }
  std::vector<Table> in;
  for (const auto& i : node.inputs) in.push_back(interpret(*i, tables));

  if (const auto* f = node.as<FilterOp>()) {
    Table out{node.schema, {}};
    for (auto& row : in[0].rows) {
      if (is_true(eval_expression(*f->predicate, row, in[0].schema))) out.rows.push_back(std::move(row));
    }
    return out;
  }
  if (const auto* p = node.as<ProjectOp>()) {
    Table out{node.schema, {}};
    for (const auto& row : in[0].rows) {
      Row r;
      for (const auto& e : p->exprs) r.push_back(eval_expression(*e, row, in[0].schema));
      out.rows.push_back(std::move(r));
    }
    return out;
  }
  if (const auto* j = node.as<JoinOp>()) {
    Table out{node.schema, {}};
    for (const auto& l : in[0].rows) {
      for (const auto& r : in[1].rows) {
        bool match = true;
        for (const auto& k : j->keys) {
          const Value c = apply_compare(CompareOp::Eq, l[in[0].schema.index_of(k.left)], r[in[1].schema.index_of(k.right)]);
          if (!is_true(c)) {
            match = false;
            break;
          }
        }
        if (!match) continue;
        Row joined = l;
        joined.insert(joined.end(), r.begin(), r.end());
        out.rows.push_back(std::move(joined));
      }
    }
    return out;
  }
  if (const auto* a = node.as<AggregateOp>()) {
    Table out{node.schema, {}};
    const Schema& schema = in[0].schema;
    const std::size_t d = a->group_cols.size();
    for (const auto mask : masks_for(a->mode, d)) {
      // Linear-scan grouping: groups in first-seen order.
      std::vector<std::pair<Row, std::vector<const Row*>>> groups;
      for (const auto& row : in[0].rows) {
        Row key(d);
        for (std::size_t i = 0; i < d; ++i) {
          if (!(mask & (std::uint64_t{1} << i))) key[i] = row[schema.index_of(a->group_cols[i])];
        }
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
          groups.emplace_back(std::move(key), std::vector<const Row*>{&row});
        } else {
          it->second.push_back(&row);
        }
      }
      const bool grand_total = d == 0 || mask == (~std::uint64_t{0} >> (64 - d));
      if (groups.empty() && grand_total) groups.emplace_back(Row(d), std::vector<const Row*>{});
      for (const auto& [key, rows] : groups) {
        Row r = key;
        for (const auto& e : a->aggregates) r.push_back(aggregate_group(std::get<Aggregate>(e->node), rows, schema));
        r.emplace_back(static_cast<std::int64_t>(mask));
        out.rows.push_back(std::move(r));
      }
    }
    return out;
  }
  if (const auto* s = node.as<SortOp>()) {
    Table out = std::move(in[0]);
    std::vector<std::pair<std::size_t, bool>> keys;
    for (const auto& k : s->keys) keys.emplace_back(out.schema.index_of(k.column), k.descending);
    std::stable_sort(out.rows.begin(), out.rows.end(), [&](const Row& x, const Row& y) {
      for (const auto& [idx, desc] : keys) {
        if (int c = compare_values(x[idx], y[idx])) return desc ? c > 0 : c < 0;
      }
      return compare_rows(x, y) < 0;
    });
    out.schema = node.schema;
    return out;
  }
  if (const auto* l = node.as<LimitOp>()) {
    Table out = std::move(in[0]);
    if (out.rows.size() > static_cast<std::size_t>(l->count)) out.rows.resize(static_cast<std::size_t>(l->count));
    out.schema = node.schema;
    return out;
  }
  throw Error(ErrorCode::Internal, "unknown plan node");
}

}  // namespace

Relation reference_interpret(const LogicalNode& plan, const TableProvider& tables) {
  Table t = interpret(plan, tables);
  return Relation(t.schema, std::move(t.rows));
}

}  // namespace hmdap::exec
