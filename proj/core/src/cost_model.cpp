#include "cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "hmdap/error.hpp"
#include "hmdap/exact_sum.hpp"

namespace hmdap::opt {

namespace detail {

double key_ndv(const NodeEstimate& side, const std::string& column) {
  auto it = side.columns.find(column);
  const double ndv = it != side.columns.end() ? it->second.ndv_estimate : side.rows;
  return std::max(ndv, 1.0);
}

double join_block_rows(std::vector<double> leaf_rows, std::vector<double> divisors) {
  std::sort(leaf_rows.begin(), leaf_rows.end());
  std::sort(divisors.begin(), divisors.end());
  double num = 1.0;
  for (double r : leaf_rows) num *= r;
  double den = 1.0;
  for (double d : divisors) den *= d;
  return num / den;
}

namespace {

double clamp01(double s) { return std::isnan(s) ? kDefaultSelectivity : std::clamp(s, 0.0, 1.0); }

CompareOp flip(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return CompareOp::Gt;
    case CompareOp::Le: return CompareOp::Ge;
    case CompareOp::Gt: return CompareOp::Lt;
    case CompareOp::Ge: return CompareOp::Le;
    default: return op;
  }
}

const ColumnStats* find_stats(const NodeEstimate& env, const Expression& e) {
  const auto* c = std::get_if<ColumnRef>(&e.node);
  if (!c) return nullptr;
  auto it = env.columns.find(c->name);
  return it == env.columns.end() ? nullptr : &it->second;
}

double range_selectivity(CompareOp op, const ColumnStats& s, const Value& v) {
  if (!v.is_numeric() || !s.min.is_numeric() || !s.max.is_numeric()) return kDefaultSelectivity;
  const double lo = s.min.as_double();
  const double hi = s.max.as_double();
  const double x = v.as_double();
  if (hi <= lo) {
    const Value r = apply_compare(op, s.min, v);
    return r.is_bool() && r.as_bool() ? 1.0 : 0.0;
  }
  const double below = (x - lo) / (hi - lo);
  switch (op) {
    case CompareOp::Lt:
    case CompareOp::Le: return clamp01(below);
    case CompareOp::Gt:
    case CompareOp::Ge: return clamp01(1.0 - below);
    default: return kDefaultSelectivity;
  }
}

double selectivity(const Expression& e, const NodeEstimate& env) {
  if (const auto* l = std::get_if<Literal>(&e.node)) {
    if (l->value.is_bool()) return l->value.as_bool() ? 1.0 : 0.0;
    return l->value.is_null() ? 0.0 : kDefaultSelectivity;
  }
  if (const auto* l = std::get_if<Logic>(&e.node)) {
    switch (l->op) {
      case LogicOp::And: return clamp01(selectivity(*l->args[0], env) * selectivity(*l->args[1], env));
      case LogicOp::Or: {
        const double a = selectivity(*l->args[0], env);
        const double b = selectivity(*l->args[1], env);
        return clamp01(a + b - a * b);
      }
      case LogicOp::Not: return clamp01(1.0 - selectivity(*l->args[0], env));
    }
  }
  if (const auto* c = std::get_if<Compare>(&e.node)) {
    const ColumnStats* ls = find_stats(env, *c->lhs);
    const ColumnStats* rs = find_stats(env, *c->rhs);
    const auto* llit = std::get_if<Literal>(&c->lhs->node);
    const auto* rlit = std::get_if<Literal>(&c->rhs->node);
    // Normalise to `column op literal`.
    CompareOp op = c->op;
    const ColumnStats* cs = nullptr;
    const Literal* literal = nullptr;
    if (ls && rlit) {
      cs = ls;
      literal = rlit;
    } else if (rs && llit) {
      cs = rs;
      literal = llit;
      op = flip(op);
    }
    if (cs && literal) {
      if (literal->value.is_null()) return 0.0;
      const double ndv = std::max(cs->ndv_estimate, 1.0);
      switch (op) {
        case CompareOp::Eq: return clamp01(1.0 / ndv);
        case CompareOp::Ne: return clamp01(1.0 - 1.0 / ndv);
        default: return range_selectivity(op, *cs, literal->value);
      }
    }
    if (ls && rs && c->op == CompareOp::Eq) {
      return clamp01(1.0 / std::max({ls->ndv_estimate, rs->ndv_estimate, 1.0}));
    }
    return kDefaultSelectivity;
  }
  return kDefaultSelectivity;
}

void collect_join_region(const LogicalNode& node, std::vector<const LogicalNode*>& leaves,
                         std::vector<JoinKey>& keys) {
  if (const auto* j = node.as<JoinOp>()) {
    keys.insert(keys.end(), j->keys.begin(), j->keys.end());
    collect_join_region(*node.inputs[0], leaves, keys);
    collect_join_region(*node.inputs[1], leaves, keys);
    return;
  }
  leaves.push_back(&node);
}

}  // namespace

NodeEstimate estimate_node(const LogicalNode& node, const StatsMap& stats) {
  NodeEstimate out;
  if (const auto* s = node.as<ScanOp>()) {
    auto it = stats.find(s->table);
    if (it == stats.end()) throw Error(ErrorCode::Plan, "no statistics for table '" + s->table + "'");
    out.rows = static_cast<double>(it->second.row_count);
    for (const auto& [name, cs] : it->second.columns) out.columns[qualify(s->table, name)] = cs;
    return out;
  }
  if (const auto* f = node.as<FilterOp>()) {
    out = estimate_node(*node.inputs[0], stats);
    out.rows *= selectivity(*f->predicate, out);
    return out;
  }
  if (const auto* p = node.as<ProjectOp>()) {
    const auto in = estimate_node(*node.inputs[0], stats);
    out.rows = in.rows;
    for (std::size_t i = 0; i < p->exprs.size(); ++i) {
      if (const auto* c = std::get_if<ColumnRef>(&p->exprs[i]->node)) {
        if (auto it = in.columns.find(c->name); it != in.columns.end()) out.columns[node.schema[i].name] = it->second;
      }
    }
    return out;
  }
  if (node.as<JoinOp>()) {
    std::vector<const LogicalNode*> leaves;
    std::vector<JoinKey> keys;
    collect_join_region(node, leaves, keys);
    std::vector<NodeEstimate> leaf_est;
    std::vector<double> leaf_rows;
    for (const auto* leaf : leaves) {
      leaf_est.push_back(estimate_node(*leaf, stats));
      leaf_rows.push_back(leaf_est.back().rows);
      for (const auto& [name, cs] : leaf_est.back().columns) out.columns[name] = cs;
    }
    auto ndv_of = [&](const std::string& column) {
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i]->schema.contains(column)) return key_ndv(leaf_est[i], column);
      }
      throw Error(ErrorCode::Internal, "join key '" + column + "' not produced by any join input");
    };
    std::vector<double> divisors;
    for (const auto& k : keys) divisors.push_back(std::max(ndv_of(k.left), ndv_of(k.right)));
    out.rows = join_block_rows(std::move(leaf_rows), std::move(divisors));
    return out;
  }
  if (const auto* a = node.as<AggregateOp>()) {
    const auto in = estimate_node(*node.inputs[0], stats);
    double total = 0.0;
    for (const auto& set : grouping_sets(a->group_cols, a->mode)) {
      if (set.columns.empty()) {
        total += 1.0;
        continue;
      }
      double groups = 1.0;
      for (auto i : set.columns) groups *= key_ndv(in, a->group_cols[i]);
      total += std::min(groups, in.rows);
    }
    out.rows = total;
    for (const auto& g : a->group_cols) {
      if (auto it = in.columns.find(g); it != in.columns.end()) {
        auto cs = it->second;
        cs.ndv_estimate = std::min(cs.ndv_estimate, total);
        out.columns[g] = cs;
      }
    }
    return out;
  }
  if (node.as<SortOp>()) return estimate_node(*node.inputs[0], stats);
  if (const auto* l = node.as<LimitOp>()) {
    out = estimate_node(*node.inputs[0], stats);
    out.rows = std::min(out.rows, static_cast<double>(l->count));
    return out;
  }
  throw Error(ErrorCode::Internal, "unknown plan node");
}

}  // namespace detail

double estimate_cardinality(const LogicalNode& node, const StatsMap& stats) {
  const double rows = detail::estimate_node(node, stats).rows;
  return std::isfinite(rows) ? std::max(rows, 0.0) : 0.0;
}

double estimate_selectivity(const Expression& predicate, const LogicalNode& input, const StatsMap& stats) {
  return detail::clamp01(detail::selectivity(predicate, detail::estimate_node(input, stats)));
}

namespace {
void accumulate_cost(const LogicalNode& node, const StatsMap& stats, ExactSum& acc) {
  acc.add(estimate_cardinality(node, stats));
  for (const auto& in : node.inputs) accumulate_cost(*in, stats, acc);
}
}  // namespace

double plan_cost(const LogicalNode& plan, const StatsMap& stats) {
  ExactSum acc;
  accumulate_cost(plan, stats, acc);
  return acc.result();
}

}  // namespace hmdap::opt
